/** Client-side series store for the plotter widget.
 *
 * Mirrors the gateway's plot streams into bounded ring buffers, offers
 * bucketed min/max downsampling for drawing, and a floor query so the
 * plot cursor and the other widgets agree on what "state at time t"
 * means without a server round trip per mouse move.
 */

export interface Sample {
  t: number;
  v: number;
}

export class SeriesStore {
  private series = new Map<string, Sample[]>();

  constructor(public capacity: number = 3000) {}

  paths(): string[] {
    return [...this.series.keys()].sort();
  }

  append(path: string, t: number, value: unknown): boolean {
    const v = typeof value === "number" ? value :
              typeof value === "boolean" ? (value ? 1 : 0) : NaN;
    if (Number.isNaN(v)) return false;
    let buf = this.series.get(path);
    if (buf === undefined) {
      buf = [];
      this.series.set(path, buf);
    }
    const last = buf[buf.length - 1];
    if (last !== undefined && t <= last.t) return false; // stale or dup
    buf.push({ t, v });
    if (buf.length > this.capacity) buf.splice(0, buf.length - this.capacity);
    return true;
  }

  samples(path: string): Sample[] {
    return this.series.get(path) ?? [];
  }

  timeRange(path: string): [number, number] | null {
    const buf = this.series.get(path);
    if (buf === undefined || buf.length === 0) return null;
    return [buf[0].t, buf[buf.length - 1].t];
  }

  /** Newest sample at or before t, matching the server's floor rule. */
  floor(path: string, t: number): Sample | null {
    const buf = this.series.get(path);
    if (buf === undefined || buf.length === 0 || t < buf[0].t) return null;
    let lo = 0;
    let hi = buf.length - 1;
    while (lo < hi) {
      const mid = (lo + hi + 1) >> 1;
      if (buf[mid].t <= t) lo = mid;
      else hi = mid - 1;
    }
    return buf[lo];
  }

  /** Min/max envelope per bucket for cheap wide-window drawing. */
  downsample(path: string, t0: number, t1: number, buckets: number): { t: number; min: number; max: number }[] {
    const buf = this.series.get(path);
    if (buf === undefined || buckets <= 0 || t1 <= t0) return [];
    const out: { t: number; min: number; max: number }[] = [];
    const dt = (t1 - t0) / buckets;
    let i = 0;
    while (i < buf.length && buf[i].t < t0) i++;
    for (let b = 0; b < buckets && i < buf.length; b++) {
      const end = t0 + (b + 1) * dt;
      let min = Infinity;
      let max = -Infinity;
      while (i < buf.length && buf[i].t <= end) {
        if (buf[i].t >= t0) {
          min = Math.min(min, buf[i].v);
          max = Math.max(max, buf[i].v);
        }
        i++;
      }
      if (min <= max) out.push({ t: t0 + (b + 0.5) * dt, min, max });
    }
    return out;
  }
}
