/** Shared timewarp cursor: one time for every widget.
 *
 * Live mode renders the newest data. Pausing freezes the cursor at the
 * newest known time; dragging moves it (backward allowed) clamped to
 * the retention window. Every widget asks this controller for the
 * cursor time so the whole dashboard shows one consistent instant.
 */

import { Frame } from "./protocol.js";

export interface CursorChange {
  t: number | null; // null means live
  clamped: boolean;
  frame: Frame; // timewarp request to send to the gateway
}

export class TimewarpController {
  live = true;
  cursor: number | null = null;
  private oldest = 0;
  private latest = 0;
  private haveWindow = false;

  /** Track the retention window from whatever samples flow past. */
  observe(time: number): void {
    if (!this.haveWindow) {
      this.oldest = time;
      this.latest = time;
      this.haveWindow = true;
      return;
    }
    if (time > this.latest) this.latest = time;
    if (time < this.oldest) this.oldest = time;
  }

  /** Retention floor moves forward as circular buffers evict. */
  evictBefore(time: number): void {
    if (this.haveWindow && time > this.oldest) {
      this.oldest = Math.min(time, this.latest);
    }
  }

  window(): [number, number] {
    return [this.oldest, this.latest];
  }

  pause(): CursorChange {
    return this.drag(this.latest);
  }

  drag(t: number): CursorChange {
    let clamped = false;
    let target = t;
    if (this.haveWindow) {
      if (target < this.oldest) { target = this.oldest; clamped = true; }
      if (target > this.latest) { target = this.latest; clamped = true; }
    }
    this.live = false;
    this.cursor = target;
    return {
      t: target, clamped,
      frame: { op: "timewarp", payload: { t: target } },
    };
  }

  resume(): CursorChange {
    this.live = true;
    this.cursor = null;
    return { t: null, clamped: false, frame: { op: "timewarp", payload: { t: null } } };
  }

  /** The time every widget should render; null means "newest". */
  cursorTime(): number | null {
    return this.live ? null : this.cursor;
  }
}
