/** Gateway wire protocol: JSON text frames {op, id, path, payload}.
 *
 * Requests carry a client-chosen id; the server answers with an ack or
 * error frame holding the same id. Server-initiated frames (publish,
 * config_changed, plot) carry no id.
 */

export const PROTOCOL_VERSION = 1;

export interface Frame {
  op: string;
  id?: number | null;
  path?: string | null;
  payload?: any;
}

export interface ParamDescriptor {
  path: string;
  value: number | boolean | string;
  type: "float" | "int" | "bool" | "str";
  min: number | null;
  max: number | null;
  step: number | null;
  unit: string | null;
}

export interface GaitCommand {
  vx: number;
  vy: number;
  omega: number;
  walk: boolean;
}

export interface PublishPush {
  path: string;
  stamp: number;
  value: any;
}

export function encodeFrame(frame: Frame): string {
  return JSON.stringify(frame);
}

/** Parse one incoming text frame; returns null for anything malformed. */
export function decodeFrame(text: string): Frame | null {
  let parsed: any;
  try {
    parsed = JSON.parse(text);
  } catch {
    return null;
  }
  if (parsed === null || typeof parsed !== "object" ||
      Array.isArray(parsed) || typeof parsed.op !== "string") {
    return null;
  }
  return parsed as Frame;
}

export function isReply(frame: Frame): boolean {
  return (frame.op === "ack" || frame.op === "error") &&
         typeof frame.id === "number";
}

export function errorMessage(frame: Frame): string {
  return frame?.payload?.message ?? "unknown error";
}
