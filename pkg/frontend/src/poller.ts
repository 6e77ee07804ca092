// Periodic refresh capped at one request per interval per screen.

type Clock = {
  setInterval: (fn: () => void, ms: number) => ReturnType<typeof setInterval>;
  clearInterval: (id: ReturnType<typeof setInterval>) => void;
};

export const MIN_POLL_INTERVAL_MS = 2000;

export class Poller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private inflight = false;
  requests = 0;

  constructor(
    private fn: () => Promise<void>,
    private intervalMs: number = MIN_POLL_INTERVAL_MS,
    private clock: Clock = globalThis,
  ) {
    // Never poll faster than the cap, whatever the caller asked for.
    this.intervalMs = Math.max(intervalMs, MIN_POLL_INTERVAL_MS);
  }

  start(): void {
    if (this.timer !== null) return;
    void this.tick();
    this.timer = this.clock.setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      this.clock.clearInterval(this.timer);
      this.timer = null;
    }
  }

  private async tick(): Promise<void> {
    if (this.inflight) return; // a slow request never stacks another
    this.inflight = true;
    this.requests += 1;
    try {
      await this.fn();
    } catch {
      // surfaced by the view itself; polling keeps going
    } finally {
      this.inflight = false;
    }
  }
}
