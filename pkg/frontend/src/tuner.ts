/** Parameter tuner state: bidirectional sync against the config server.
 *
 * The server is canonical. A local edit marks the row pending until the
 * ack arrives with the clamped value; change pushes that race with a
 * pending edit are ignored so the slider does not bounce under the
 * user's finger.
 */

import { ParamDescriptor } from "./protocol.js";

export interface ParamRow {
  desc: ParamDescriptor;
  value: number | boolean | string;
  pending: boolean;
  requested: number | boolean | string | null;
  revision: number;
}

export interface EditResult {
  path: string;
  payload: { value: any };
}

export interface AckResult {
  value: any;
  clamped: boolean;
}

export class ParamTuner {
  rows = new Map<string, ParamRow>();

  loadList(params: ParamDescriptor[]): void {
    this.rows.clear();
    for (const desc of params) {
      this.rows.set(desc.path, {
        desc, value: desc.value, pending: false, requested: null, revision: 0,
      });
    }
  }

  /** Group rows by their first path segment for tree display. */
  groups(): Map<string, ParamRow[]> {
    const out = new Map<string, ParamRow[]>();
    for (const row of this.rows.values()) {
      const group = row.desc.path.split("/")[1] ?? "";
      const list = out.get(group) ?? [];
      list.push(row);
      out.set(group, list);
    }
    return out;
  }

  /** Start a local edit; returns the config_set request to send. */
  beginEdit(path: string, value: any): EditResult {
    const row = this.mustGet(path);
    row.pending = true;
    row.requested = value;
    return { path, payload: { value } };
  }

  /** Server ack with the canonical (possibly clamped) value. */
  applyAck(path: string, value: any): AckResult {
    const row = this.mustGet(path);
    const clamped = row.requested !== null && value !== row.requested;
    row.value = value;
    row.pending = false;
    row.requested = null;
    return { value, clamped };
  }

  /** Server rejected the edit; revert to the last canonical value. */
  applyError(path: string): any {
    const row = this.mustGet(path);
    row.pending = false;
    row.requested = null;
    return row.value;
  }

  /** Change push from any client (including our own ack'd edits). */
  applyRemote(path: string, value: any, revision: number): boolean {
    const row = this.rows.get(path);
    if (row === undefined) return false;
    if (revision <= row.revision) return false; // stale push
    row.revision = revision;
    if (row.pending) return false; // our edit is in flight; ack wins
    row.value = value;
    return true;
  }

  get(path: string): any {
    return this.mustGet(path).value;
  }

  private mustGet(path: string): ParamRow {
    const row = this.rows.get(path);
    if (row === undefined) throw new Error(`unknown parameter: ${path}`);
    return row;
  }
}
