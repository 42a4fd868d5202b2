/** Diagnostics panel model: robot health readouts and servo fading.
 *
 * Holds the newest /diagnostics payload, flags it visually stale after
 * one second without an update, and builds the fade service frames.
 */

import { Frame } from "./protocol.js";

export const STALE_AFTER_S = 1.0;

export interface DiagnosticsPayload {
  battery: number;
  max_temperature: number;
  motion_state: string;
  faulted: boolean;
}

export interface DisplayRow {
  label: string;
  text: string;
  alert: boolean;
}

export class DiagnosticsModel {
  payload: DiagnosticsPayload | null = null;
  stamp = 0;

  constructor(
    public batteryLowV: number = 10.5,
    public temperatureHighC: number = 70.0,
  ) {}

  update(stamp: number, payload: DiagnosticsPayload): void {
    if (this.payload !== null && stamp < this.stamp) return;
    this.payload = payload;
    this.stamp = stamp;
  }

  isStale(now: number): boolean {
    return this.payload === null || now - this.stamp > STALE_AFTER_S;
  }

  rows(now: number): DisplayRow[] {
    if (this.payload === null) {
      return [{ label: "status", text: "no data", alert: true }];
    }
    const p = this.payload;
    const stale = this.isStale(now) ? " (stale)" : "";
    return [
      {
        label: "battery",
        text: `${p.battery.toFixed(2)} V${stale}`,
        alert: p.battery < this.batteryLowV,
      },
      {
        label: "max servo temp",
        text: `${p.max_temperature.toFixed(1)} C${stale}`,
        alert: p.max_temperature > this.temperatureHighC,
      },
      {
        label: "motion state",
        text: `${p.motion_state}${stale}`,
        alert: p.faulted,
      },
    ];
  }

  fadeFrame(direction: "in" | "out"): Frame {
    return {
      op: "call",
      path: "/motion/fade",
      payload: { request: direction },
    };
  }
}
