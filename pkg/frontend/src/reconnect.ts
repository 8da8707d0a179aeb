/**
 * Reconnecting message source with exponential backoff.
 *
 * View state lives outside the socket, so a reconnect never clears the
 * rolling buffers; frames simply resume flowing into the reducer. The
 * socket factory and timer are injectable so tests can drive the schedule
 * deterministically.
 */

export const BACKOFF_BASE_MS = 500;
export const BACKOFF_CAP_MS = 30_000;

export function backoffDelayMs(
  attempt: number,
  baseMs: number = BACKOFF_BASE_MS,
  capMs: number = BACKOFF_CAP_MS,
): number {
  return Math.min(capMs, baseMs * 2 ** attempt);
}

export interface SocketLike {
  onmessage: ((event: { data: string }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  close(): void;
}

export type SocketFactory = () => SocketLike;
export type Scheduler = (fn: () => void, delayMs: number) => void;

export interface StreamCallbacks {
  onFrame(frame: unknown): void;
  onStatus(status: "connecting" | "open" | "closed"): void;
}

export class ReconnectingStream {
  private attempt = 0;
  private socket: SocketLike | null = null;
  private stopped = false;
  readonly scheduledDelays: number[] = [];

  constructor(
    private readonly factory: SocketFactory,
    private readonly callbacks: StreamCallbacks,
    private readonly scheduler: Scheduler = (fn, ms) => setTimeout(fn, ms),
  ) {}

  start(): void {
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
  }

  private connect(): void {
    if (this.stopped) return;
    this.callbacks.onStatus("connecting");
    const socket = this.factory();
    this.socket = socket;
    socket.onopen = () => {
      this.attempt = 0;
      this.callbacks.onStatus("open");
    };
    socket.onmessage = (event) => {
      try {
        this.callbacks.onFrame(JSON.parse(event.data));
      } catch (err) {
        console.warn("dashboard: undecodable frame", err);
      }
    };
    socket.onclose = () => {
      this.callbacks.onStatus("closed");
      if (this.stopped) return;
      const delay = backoffDelayMs(this.attempt);
      this.scheduledDelays.push(delay);
      this.attempt += 1;
      this.scheduler(() => this.connect(), delay);
    };
  }
}
