/** Shared fakes: a scripted gateway and a recording audio sink. */

import type { GatewayClient } from '../src/client.js';
import type { AudioSink } from '../src/narration-player.js';
import type {
    FeedbackResponseJson,
    NarrationChunk,
    QuestionViewJson,
    StructuredFeedbackJson,
} from '../src/types.js';

export function structuredFeedback(
    overrides: Partial<StructuredFeedbackJson> = {},
): StructuredFeedbackJson {
    return {
        score: 1,
        band: 'CORRECT',
        statement: 'Nice work, that is correct.',
        explanation:
            'The slide pairs integrated labels with the diagram so working memory is spared.',
        advice: 'Restate the idea in your own words. What changes if labels move away?',
        terms: [
            {
                surface_text: 'integrated labels',
                tooltip_text: 'words placed directly on the graphic',
                segment: 'explanation',
            },
            {
                surface_text: 'working memory',
                tooltip_text: 'the limited workspace for active thought',
                segment: 'explanation',
            },
        ],
        best_slide: ['lecture-1/p2', 'https://example.edu/deck.pdf'],
        model_meta: {},
        ...overrides,
    };
}

export function feedbackResponse(
    overrides: Partial<FeedbackResponseJson> = {},
): FeedbackResponseJson {
    return {
        submission_id: 'sub-1',
        attempt_number: 1,
        feedback: structuredFeedback(),
        slide: {
            page_id: 'lecture-1/p2',
            image_url: '/api/slides/lecture-1/p2',
            deck_source_uri: 'https://example.edu/deck.pdf',
        },
        narration_available: true,
        cache_hit: true,
        deck_links: ['https://example.edu/deck.pdf'],
        ...overrides,
    };
}

export function mcqQuestion(): QuestionViewJson {
    return {
        question_id: 'mcq-01',
        kind: 'MCQ',
        stem_text: 'Which layout applies the principle?',
        image_refs: [],
        options: [
            ['opt-a', 'Integrated labels'],
            ['opt-b', 'Separate legend'],
        ],
        max_score: 1,
    };
}

export function oeqQuestion(): QuestionViewJson {
    return {
        question_id: 'oeq-01',
        kind: 'OEQ',
        stem_text: 'Explain why aligned labels help.',
        image_refs: [],
        options: [],
        max_score: 2,
    };
}

function pcmChunk(seq: number, last: boolean): NarrationChunk {
    return { seq, last, payload: new Uint8Array(64) };
}

export class FakeGatewayClient implements GatewayClient {
    question: QuestionViewJson = mcqQuestion();
    responses: FeedbackResponseJson[] = [];
    submitted: Array<{ learnerId: string; questionId: string; answer: string }> = [];
    submitDelayMs = 0;
    narrationChunks = 5;
    narrationDelayMs = 5;
    streamCompleted = false;
    cancelled: string[] = [];
    failStream = false;
    private attempt = 0;

    async fetchQuestion(): Promise<QuestionViewJson> {
        return this.question;
    }

    async submit(
        learnerId: string,
        questionId: string,
        answer: string,
    ): Promise<FeedbackResponseJson> {
        this.submitted.push({ learnerId, questionId, answer });
        if (this.submitDelayMs) {
            await new Promise((resolve) => setTimeout(resolve, this.submitDelayMs));
        }
        this.attempt += 1;
        const canned = this.responses.shift();
        return canned ?? feedbackResponse({ attempt_number: this.attempt });
    }

    slideUrl(imageUrl: string): string {
        return `http://gateway.test${imageUrl}`;
    }

    async startNarration(): Promise<string> {
        return 'session-1';
    }

    async *streamNarration(): AsyncGenerator<NarrationChunk> {
        this.streamCompleted = false;
        for (let i = 0; i < this.narrationChunks; i++) {
            await new Promise((resolve) => setTimeout(resolve, this.narrationDelayMs));
            if (this.failStream && i === 1) {
                throw new Error('injected stream failure');
            }
            yield pcmChunk(i, i === this.narrationChunks - 1);
        }
        this.streamCompleted = true;
    }

    async cancelNarration(sessionId: string): Promise<void> {
        this.cancelled.push(sessionId);
    }
}

export class FakeSink implements AudioSink {
    started: number[] = [];
    enqueued: Int16Array[] = [];
    stopped = 0;

    start(sampleRate: number): void {
        this.started.push(sampleRate);
    }

    enqueue(samples: Int16Array): void {
        this.enqueued.push(samples);
    }

    stop(): void {
        this.stopped += 1;
    }
}
