/** Gateway client: the panel talks to the service only through this surface. */

import type {
    FeedbackResponseJson,
    NarrationChunk,
    QuestionViewJson,
} from './types.js';

export interface GatewayClient {
    fetchQuestion(questionId: string): Promise<QuestionViewJson>;
    submit(learnerId: string, questionId: string, answer: string): Promise<FeedbackResponseJson>;
    /** Resolve a gateway-relative image URL for use in an <img> src. */
    slideUrl(imageUrl: string): string;
    startNarration(submissionId: string): Promise<string>;
    streamNarration(sessionId: string): AsyncGenerator<NarrationChunk>;
    cancelNarration(sessionId: string): Promise<void>;
}

function decodeBase64(data: string): Uint8Array {
    const binary = atob(data);
    const bytes = new Uint8Array(binary.length);
    for (let i = 0; i < binary.length; i++) {
        bytes[i] = binary.charCodeAt(i);
    }
    return bytes;
}

/** Parse one SSE block ("event: ...\ndata: ...") into its fields. */
function parseEventBlock(block: string): { event: string; data: string } {
    let event = 'message';
    const dataLines: string[] = [];
    for (const line of block.split('\n')) {
        if (line.startsWith('event:')) {
            event = line.slice('event:'.length).trim();
        } else if (line.startsWith('data:')) {
            dataLines.push(line.slice('data:'.length).trim());
        }
    }
    return { event, data: dataLines.join('\n') };
}

export class HttpGatewayClient implements GatewayClient {
    constructor(private readonly baseUrl: string = '') {
        this.baseUrl = baseUrl.replace(/\/$/, '');
    }

    private async request(path: string, init?: RequestInit): Promise<Response> {
        const response = await fetch(this.baseUrl + path, init);
        if (!response.ok) {
            const body = await response.text().catch(() => '');
            throw new Error(`gateway ${init?.method ?? 'GET'} ${path} -> ${response.status}: ${body}`);
        }
        return response;
    }

    async fetchQuestion(questionId: string): Promise<QuestionViewJson> {
        const response = await this.request(`/api/questions/${encodeURIComponent(questionId)}`);
        return response.json();
    }

    async submit(learnerId: string, questionId: string, answer: string): Promise<FeedbackResponseJson> {
        const response = await this.request('/api/submissions', {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ learner_id: learnerId, question_id: questionId, answer }),
        });
        return response.json();
    }

    slideUrl(imageUrl: string): string {
        return this.baseUrl + imageUrl;
    }

    async startNarration(submissionId: string): Promise<string> {
        const response = await this.request('/api/narration', {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ submission_id: submissionId }),
        });
        const body = await response.json();
        return body.session_id;
    }

    async *streamNarration(sessionId: string): AsyncGenerator<NarrationChunk> {
        const response = await this.request(
            `/api/narration/${encodeURIComponent(sessionId)}?framing=events`,
        );
        if (!response.body) {
            throw new Error('narration stream has no body');
        }
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        let buffer = '';
        try {
            while (true) {
                const { done, value } = await reader.read();
                if (done) break;
                buffer += decoder.decode(value, { stream: true });
                let boundary = buffer.indexOf('\n\n');
                while (boundary >= 0) {
                    const block = buffer.slice(0, boundary);
                    buffer = buffer.slice(boundary + 2);
                    boundary = buffer.indexOf('\n\n');
                    if (!block.trim()) continue;
                    const { event, data } = parseEventBlock(block);
                    if (event === 'chunk') {
                        const parsed = JSON.parse(data);
                        yield {
                            seq: parsed.seq,
                            last: parsed.last,
                            payload: decodeBase64(parsed.payload_b64),
                        };
                    } else if (event === 'error') {
                        throw new Error(`narration stream failed: ${data}`);
                    } else if (event === 'end') {
                        return;
                    }
                }
            }
        } finally {
            reader.releaseLock();
        }
    }

    async cancelNarration(sessionId: string): Promise<void> {
        await this.request(`/api/narration/${encodeURIComponent(sessionId)}`, {
            method: 'DELETE',
        });
    }
}
