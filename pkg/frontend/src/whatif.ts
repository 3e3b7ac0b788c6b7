/**
 * Debounced what-if queries for the bonus slider.
 *
 * Rapid slider movement must not translate into a request per pixel: the
 * runner is called at most once per settled value, stale responses are
 * dropped, and an identical settled value is not re-queried.
 */

export type Scheduler = (callback: () => void, waitMs: number) => unknown;
export type Canceller = (handle: unknown) => void;

export class WhatIfDebouncer<R> {
  private timer: unknown = null;
  private pendingB: number | null = null;
  private lastRequestedB: number | null = null;
  private generation = 0;
  requestCount = 0;

  constructor(
    private readonly run: (b: number) => Promise<R>,
    private readonly onResult: (b: number, result: R) => void,
    private readonly onError: (b: number, error: unknown) => void,
    private readonly waitMs = 150,
    private readonly schedule: Scheduler = (cb, ms) => setTimeout(cb, ms),
    private readonly cancel: Canceller = (handle) => clearTimeout(handle as never),
  ) {}

  /** Record a slider movement; only the settled value triggers a query. */
  update(b: number): void {
    this.pendingB = b;
    if (this.timer !== null) this.cancel(this.timer);
    this.timer = this.schedule(() => this.fire(), this.waitMs);
  }

  private fire(): void {
    this.timer = null;
    const b = this.pendingB;
    this.pendingB = null;
    if (b === null || b === this.lastRequestedB) return;
    this.lastRequestedB = b;
    this.requestCount += 1;
    const generation = ++this.generation;
    this.run(b).then(
      (result) => {
        if (generation === this.generation) this.onResult(b, result);
      },
      (error) => {
        if (generation === this.generation) {
          // Allow a retry of the same value after a failure.
          this.lastRequestedB = null;
          this.onError(b, error);
        }
      },
    );
  }

  /** Force any pending value out immediately (used on blur/submit). */
  flush(): void {
    if (this.timer !== null) {
      this.cancel(this.timer);
      this.fire();
    }
  }
}
