/** 2D field view model: coordinate transforms and render primitives.
 *
 * Pure geometry; the canvas widget just draws whatever primitive list
 * this produces. Field frame: x toward the opponent goal, y left,
 * origin at the center mark. Canvas frame: x right, y down.
 */

export interface FieldDims {
  length: number;
  width: number;
  goalWidth: number;
  centerCircleRadius: number;
  border: number;
}

export const FIELD: FieldDims = {
  length: 9.0,
  width: 6.0,
  goalWidth: 2.6,
  centerCircleRadius: 0.75,
  border: 0.7,
};

export interface Pose {
  x: number;
  y: number;
  theta: number;
}

export interface Detection {
  kind: string;
  ego: number[]; // egocentric [x, y, ...] in the robot footprint frame
}

export type Primitive =
  | { kind: "circle"; x: number; y: number; r: number; style: string }
  | { kind: "line"; x1: number; y1: number; x2: number; y2: number; style: string }
  | { kind: "pose"; x: number; y: number; theta: number; style: string }
  | { kind: "dot"; x: number; y: number; style: string };

export class FieldTransform {
  readonly scale: number;
  readonly cx: number;
  readonly cy: number;

  constructor(canvasW: number, canvasH: number, dims: FieldDims = FIELD) {
    const worldW = dims.length + 2 * dims.border;
    const worldH = dims.width + 2 * dims.border;
    // uniform scale so the aspect ratio is preserved
    this.scale = Math.min(canvasW / worldW, canvasH / worldH);
    this.cx = canvasW / 2;
    this.cy = canvasH / 2;
  }

  toCanvas(x: number, y: number): [number, number] {
    return [this.cx + x * this.scale, this.cy - y * this.scale];
  }

  toWorld(u: number, v: number): [number, number] {
    return [(u - this.cx) / this.scale, (this.cy - v) / this.scale];
  }
}

/** Egocentric observation into the field frame via the given pose. */
export function egoToWorld(pose: Pose, ego: number[]): [number, number] {
  const c = Math.cos(pose.theta);
  const s = Math.sin(pose.theta);
  return [
    pose.x + c * ego[0] - s * ego[1],
    pose.y + s * ego[0] + c * ego[1],
  ];
}

export function fieldLines(dims: FieldDims = FIELD): Primitive[] {
  const hl = dims.length / 2;
  const hw = dims.width / 2;
  const out: Primitive[] = [
    { kind: "line", x1: -hl, y1: -hw, x2: hl, y2: -hw, style: "line" },
    { kind: "line", x1: -hl, y1: hw, x2: hl, y2: hw, style: "line" },
    { kind: "line", x1: -hl, y1: -hw, x2: -hl, y2: hw, style: "line" },
    { kind: "line", x1: hl, y1: -hw, x2: hl, y2: hw, style: "line" },
    { kind: "line", x1: 0, y1: -hw, x2: 0, y2: hw, style: "line" },
    { kind: "circle", x: 0, y: 0, r: dims.centerCircleRadius, style: "line" },
  ];
  for (const sx of [-1, 1]) {
    for (const sy of [-1, 1]) {
      out.push({ kind: "dot", x: sx * hl, y: sy * dims.goalWidth / 2, style: "post" });
    }
  }
  return out;
}

export interface FieldState {
  belief: Pose | null;
  truth: Pose | null; // sim mode only
  particles: number[][] | null; // rows [x, y, theta]
  detections: Detection[] | null;
  stale: boolean;
}

/** Everything to draw for one frame, in field coordinates. */
export function buildScene(state: FieldState, dims: FieldDims = FIELD): Primitive[] {
  const out = fieldLines(dims);
  if (state.particles) {
    for (const p of state.particles) {
      out.push({ kind: "dot", x: p[0], y: p[1], style: "particle" });
    }
  }
  if (state.truth) {
    out.push({ kind: "pose", ...state.truth, style: "truth" });
  }
  if (state.belief) {
    const style = state.stale ? "belief-stale" : "belief";
    out.push({ kind: "pose", ...state.belief, style });
    if (state.detections) {
      for (const det of state.detections) {
        const [x, y] = egoToWorld(state.belief, det.ego);
        const style = det.kind === "ball" ? "ball" : `det-${det.kind}`;
        out.push({ kind: "circle", x, y, r: 0.12, style });
      }
    }
  }
  return out;
}
