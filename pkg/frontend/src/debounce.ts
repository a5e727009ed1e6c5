/** Trailing-edge debouncer; timer functions injectable for tests. */

export type TimerId = ReturnType<typeof setTimeout>;

export interface Clock {
  set(fn: () => void, ms: number): TimerId;
  clear(id: TimerId): void;
}

const realClock: Clock = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (id) => clearTimeout(id),
};

export class Debouncer {
  private timer: TimerId | null = null;

  constructor(
    private readonly delayMs: number,
    private readonly clock: Clock = realClock,
  ) {}

  /** Schedule fn after the delay, replacing any pending call. */
  schedule(fn: () => void): void {
    this.cancel();
    this.timer = this.clock.set(() => {
      this.timer = null;
      fn();
    }, this.delayMs);
  }

  cancel(): void {
    if (this.timer !== null) {
      this.clock.clear(this.timer);
      this.timer = null;
    }
  }

  get pending(): boolean {
    return this.timer !== null;
  }
}
