/** Fixed-interval polling that aborts the previous round's requests. */

export class Poller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private controller: AbortController | null = null;

  constructor(
    private readonly tick: (signal: AbortSignal) => Promise<void>,
    private readonly intervalMs: number = 2000,
  ) {}

  /** Run one round now, cancelling any round still in flight. */
  async runOnce(): Promise<void> {
    this.controller?.abort();
    this.controller = new AbortController();
    const { signal } = this.controller;
    try {
      await this.tick(signal);
    } catch (err) {
      if ((err as { name?: string }).name === "AbortError") return;
      throw err;
    }
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => {
      void this.runOnce().catch(() => undefined);
    }, this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.controller?.abort();
    this.controller = null;
  }
}
