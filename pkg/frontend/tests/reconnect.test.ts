/** Reconnect policy: exponential backoff, buffers preserved across drops. */

import { describe, expect, it } from "vitest";

import { BACKOFF_CAP_MS, ReconnectingStream, SocketLike, backoffDelayMs } from "../src/reconnect.js";
import { applyMessage, initialState, setConnection } from "../src/state.js";

class FakeSocket implements SocketLike {
  onmessage: ((event: { data: string }) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  closed = false;

  close(): void {
    this.closed = true;
  }
}

describe("backoff schedule", () => {
  it("doubles per attempt and caps", () => {
    expect(backoffDelayMs(0)).toBe(500);
    expect(backoffDelayMs(1)).toBe(1000);
    expect(backoffDelayMs(2)).toBe(2000);
    expect(backoffDelayMs(10)).toBe(BACKOFF_CAP_MS);
  });
});

describe("reconnecting stream", () => {
  it("reconnects with growing delays and resets after a successful open", () => {
    const sockets: FakeSocket[] = [];
    const queue: (() => void)[] = [];
    const stream = new ReconnectingStream(
      () => {
        const socket = new FakeSocket();
        sockets.push(socket);
        return socket;
      },
      { onFrame: () => {}, onStatus: () => {} },
      (fn) => queue.push(fn),
    );
    stream.start();
    sockets[0]!.onclose!();
    queue.shift()!();
    sockets[1]!.onclose!();
    queue.shift()!();
    expect(stream.scheduledDelays).toEqual([500, 1000]);

    sockets[2]!.onopen!(); // success resets the attempt counter
    sockets[2]!.onclose!();
    expect(stream.scheduledDelays).toEqual([500, 1000, 500]);
  });

  it("preserves the rolling buffer across a disconnect", () => {
    const sockets: FakeSocket[] = [];
    const queue: (() => void)[] = [];
    let state = initialState();
    const stream = new ReconnectingStream(
      () => {
        const socket = new FakeSocket();
        sockets.push(socket);
        return socket;
      },
      {
        onFrame: (frame) => (state = applyMessage(state, frame)),
        onStatus: (status) => (state = setConnection(state, status)),
      },
      (fn) => queue.push(fn),
    );
    stream.start();
    sockets[0]!.onopen!();
    const telemetry = (seq: number) => ({
      data: JSON.stringify({
        type: "telemetry",
        seq,
        payload: {
          seq, t: seq * 7.5, pps: 0, bytes_per_s: 0, top_protocol: "none",
          cpu_util: 0, mem_util: 0, queue_len: 0, update_interval_s: 7.5,
        },
      }),
    });
    sockets[0]!.onmessage!(telemetry(1));
    sockets[0]!.onmessage!(telemetry(2));
    sockets[0]!.onclose!();
    expect(state.connection).toBe("closed");
    expect(state.snapshots).toHaveLength(2);

    queue.shift()!();
    sockets[1]!.onopen!();
    sockets[1]!.onmessage!(telemetry(3));
    expect(state.connection).toBe("open");
    expect(state.snapshots).toHaveLength(3); // buffer survived the drop
  });

  it("stop() prevents further reconnects", () => {
    const queue: (() => void)[] = [];
    const sockets: FakeSocket[] = [];
    const stream = new ReconnectingStream(
      () => {
        const socket = new FakeSocket();
        sockets.push(socket);
        return socket;
      },
      { onFrame: () => {}, onStatus: () => {} },
      (fn) => queue.push(fn),
    );
    stream.start();
    stream.stop();
    sockets[0]!.onclose!();
    expect(queue).toHaveLength(0);
  });
});
