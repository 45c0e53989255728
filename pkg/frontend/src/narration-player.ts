/**
 * Streaming narration playback: audio output starts after the first chunk,
 * well before the stream finishes.
 */

import type { GatewayClient } from './client.js';
import type { PlaybackState } from './types.js';

export const NARRATION_SAMPLE_RATE = 16000;

/** Pluggable audio output so playback logic is testable without WebAudio. */
export interface AudioSink {
    start(sampleRate: number): void;
    enqueue(samples: Int16Array): void;
    stop(): void;
}

export class WebAudioSink implements AudioSink {
    private context: AudioContext | null = null;
    private nextStart = 0;
    private sampleRate = NARRATION_SAMPLE_RATE;

    start(sampleRate: number): void {
        this.sampleRate = sampleRate;
        this.context = new AudioContext();
        this.nextStart = this.context.currentTime;
    }

    enqueue(samples: Int16Array): void {
        if (!this.context) return;
        const buffer = this.context.createBuffer(1, samples.length, this.sampleRate);
        const channel = buffer.getChannelData(0);
        for (let i = 0; i < samples.length; i++) {
            channel[i] = samples[i] / 32768;
        }
        const source = this.context.createBufferSource();
        source.buffer = buffer;
        source.connect(this.context.destination);
        const at = Math.max(this.nextStart, this.context.currentTime);
        source.start(at);
        this.nextStart = at + buffer.duration;
    }

    stop(): void {
        void this.context?.close();
        this.context = null;
    }
}

function toSamples(payload: Uint8Array): Int16Array {
    // 16-bit little-endian PCM
    const samples = new Int16Array(payload.length >> 1);
    const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
    for (let i = 0; i < samples.length; i++) {
        samples[i] = view.getInt16(i * 2, true);
    }
    return samples;
}

export class NarrationPlayer {
    state: PlaybackState = 'idle';
    chunksPlayed = 0;
    private sessionId: string | null = null;
    private stopped = false;

    constructor(
        private readonly client: GatewayClient,
        private readonly sink: AudioSink,
        private readonly onStateChange: (state: PlaybackState) => void = () => {},
    ) {}

    private setState(state: PlaybackState): void {
        this.state = state;
        this.onStateChange(state);
    }

    /** Open the stream and start audio output after the first chunk arrives. */
    async play(submissionId: string): Promise<void> {
        if (this.state === 'buffering' || this.state === 'playing') return;
        this.stopped = false;
        this.chunksPlayed = 0;
        this.setState('buffering');
        try {
            this.sessionId = await this.client.startNarration(submissionId);
            for await (const chunk of this.client.streamNarration(this.sessionId)) {
                if (this.stopped) return;
                if (this.chunksPlayed === 0) {
                    this.sink.start(NARRATION_SAMPLE_RATE);
                    this.setState('playing');
                }
                this.sink.enqueue(toSamples(chunk.payload));
                this.chunksPlayed += 1;
            }
            if (!this.stopped) {
                this.setState('done');
            }
        } catch (error) {
            if (!this.stopped) {
                this.setState('error');
                throw error;
            }
        }
    }

    /** Cancel the session; no further audio is queued. */
    async stop(): Promise<void> {
        this.stopped = true;
        this.sink.stop();
        if (this.sessionId !== null) {
            await this.client.cancelNarration(this.sessionId).catch(() => {});
            this.sessionId = null;
        }
        this.setState('idle');
    }
}
