import { describe, expect, it } from 'vitest';

import { NarrationPlayer } from '../src/narration-player.js';
import type { PlaybackState } from '../src/types.js';
import { FakeGatewayClient, FakeSink } from './helpers.js';

function trackingPlayer(client: FakeGatewayClient, sink: FakeSink) {
    const timeline: Array<{ state: PlaybackState; streamDone: boolean }> = [];
    const player = new NarrationPlayer(client, sink, (state) => {
        timeline.push({ state, streamDone: client.streamCompleted });
    });
    return { player, timeline };
}

describe('NarrationPlayer', () => {
    it('enters playing before the stream completes', async () => {
        const client = new FakeGatewayClient();
        client.narrationChunks = 6;
        const sink = new FakeSink();
        const { player, timeline } = trackingPlayer(client, sink);

        await player.play('sub-1');

        const states = timeline.map((t) => t.state);
        expect(states).toEqual(['buffering', 'playing', 'done']);
        const playing = timeline.find((t) => t.state === 'playing')!;
        expect(playing.streamDone).toBe(false); // started while chunks still pending
        expect(sink.started).toEqual([16000]);
        expect(sink.enqueued).toHaveLength(6);
        expect(player.chunksPlayed).toBe(6);
    });

    it('decodes little-endian 16-bit samples', async () => {
        const client = new FakeGatewayClient();
        client.narrationChunks = 1;
        const sink = new FakeSink();
        const { player } = trackingPlayer(client, sink);
        await player.play('sub-1');
        expect(sink.enqueued[0]).toHaveLength(32); // 64 bytes -> 32 samples
        expect(Array.from(sink.enqueued[0])).toEqual(new Array(32).fill(0));
    });

    it('stop cancels the session and stops the sink', async () => {
        const client = new FakeGatewayClient();
        client.narrationChunks = 50;
        client.narrationDelayMs = 5;
        const sink = new FakeSink();
        const { player } = trackingPlayer(client, sink);

        const playback = player.play('sub-1');
        await new Promise((resolve) => setTimeout(resolve, 25));
        await player.stop();
        await playback;

        expect(player.state).toBe('idle');
        expect(sink.stopped).toBe(1);
        expect(client.cancelled).toEqual(['session-1']);
        expect(player.chunksPlayed).toBeLessThan(50);
    });

    it('marks the error state when the stream fails', async () => {
        const client = new FakeGatewayClient();
        client.failStream = true;
        const sink = new FakeSink();
        const { player } = trackingPlayer(client, sink);
        await expect(player.play('sub-1')).rejects.toThrow('injected stream failure');
        expect(player.state).toBe('error');
    });
});
