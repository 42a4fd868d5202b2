/** Walk control panel logic: manual gait commands with keepalive.
 *
 * A command frame goes out immediately on every control change and at a
 * fixed keepalive rate while walking, so the robot side can treat a
 * silent channel as a stop. The panel disables itself while the
 * behavior stack owns the gait channel (any gait-driving activation on
 * the control layer is nonzero) or while disconnected, and emits one
 * final stop command on the transition.
 */

import { Frame, GaitCommand } from "./protocol.js";

export const GAIT_OWNERS = [
  "game_control", "search_ball", "go_behind_ball", "dribble", "kick",
];

export const KEEPALIVE_MS = 250;

export interface Activations {
  soccer?: Record<string, number>;
  control?: Record<string, number>;
}

export function behaviorOwnsGait(act: Activations | null): boolean {
  if (!act?.control) return false;
  return GAIT_OWNERS.some((name) => (act.control![name] ?? 0) > 0);
}

function commandFrame(cmd: GaitCommand): Frame {
  return { op: "publish", path: "/gait/cmd", payload: { value: cmd } };
}

export class WalkController {
  vx = 0;
  vy = 0;
  omega = 0;
  walking = false;
  private owned = false;
  private connected = false;
  private dirty = false;
  private stopQueued = false;
  private lastSent = -Infinity;

  get enabled(): boolean {
    return this.connected && !this.owned;
  }

  setAxes(vx: number, vy: number, omega: number): void {
    if (vx === this.vx && vy === this.vy && omega === this.omega) return;
    this.vx = vx;
    this.vy = vy;
    this.omega = omega;
    if (this.enabled) this.dirty = true;
  }

  start(): void {
    if (!this.enabled || this.walking) return;
    this.walking = true;
    this.dirty = true;
  }

  stop(): void {
    if (!this.walking) return;
    this.walking = false;
    if (this.enabled) this.dirty = true;
  }

  updateActivations(act: Activations | null): void {
    const owned = behaviorOwnsGait(act);
    if (owned && !this.owned && this.walking) {
      // hand the channel over cleanly: one final halt command
      this.walking = false;
      this.stopQueued = this.connected;
      this.dirty = false;
    }
    this.owned = owned;
  }

  connectionChanged(connected: boolean): void {
    this.connected = connected;
    if (!connected) {
      this.walking = false;
      this.dirty = false;
      this.stopQueued = false;
    }
  }

  /** Called on a UI timer; returns the frame to send now, if any. */
  tick(nowMs: number): Frame | null {
    if (this.stopQueued) {
      this.stopQueued = false;
      this.lastSent = nowMs;
      return commandFrame({ vx: 0, vy: 0, omega: 0, walk: false });
    }
    if (!this.enabled) return null;
    const keepaliveDue = this.walking && nowMs - this.lastSent >= KEEPALIVE_MS;
    if (!this.dirty && !keepaliveDue) return null;
    this.dirty = false;
    this.lastSent = nowMs;
    return commandFrame({
      vx: this.vx, vy: this.vy, omega: this.omega, walk: this.walking,
    });
  }
}
