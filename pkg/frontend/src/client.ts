/** Gateway client: request/ack matching and push routing over one socket.
 *
 * The socket is injected through a minimal interface so the logic is
 * testable without a browser or a server. All widgets share a single
 * connection; pushes are fanned out to per-path handlers.
 */

import { decodeFrame, encodeFrame, errorMessage, Frame, isReply } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

interface Pending {
  resolve: (frame: Frame) => void;
  reject: (err: Error) => void;
}

export class GatewayError extends Error {}

export class GatewayClient {
  private socket: SocketLike | null = null;
  private pending = new Map<number, Pending>();
  private nextId = 0;
  private topicHandlers = new Map<string, ((stamp: number, value: any) => void)[]>();
  private plotHandlers = new Map<string, ((time: number, value: any) => void)[]>();
  private configHandlers: ((path: string, value: any, revision: number) => void)[] = [];
  private stateHandlers: ((connected: boolean) => void)[] = [];
  connected = false;

  constructor(private factory: SocketFactory) {}

  connect(url: string): void {
    const sock = this.factory(url);
    this.socket = sock;
    sock.onopen = () => {
      this.connected = true;
      for (const h of this.stateHandlers) h(true);
    };
    sock.onmessage = (ev) => this.handleMessage(ev.data);
    sock.onclose = () => this.handleClose();
  }

  disconnect(): void {
    this.socket?.close();
    this.handleClose();
  }

  private handleClose(): void {
    if (!this.connected && this.pending.size === 0) return;
    this.connected = false;
    const waiting = [...this.pending.values()];
    this.pending.clear();
    for (const p of waiting) p.reject(new GatewayError("connection closed"));
    for (const h of this.stateHandlers) h(false);
  }

  handleMessage(text: string): void {
    const frame = decodeFrame(text);
    if (frame === null) return;
    if (isReply(frame)) {
      const entry = this.pending.get(frame.id as number);
      if (entry === undefined) return;
      this.pending.delete(frame.id as number);
      if (frame.op === "ack") entry.resolve(frame);
      else entry.reject(new GatewayError(errorMessage(frame)));
      return;
    }
    if (frame.op === "publish" && frame.path) {
      for (const h of this.topicHandlers.get(frame.path) ?? []) {
        h(frame.payload?.stamp ?? 0, frame.payload?.value);
      }
    } else if (frame.op === "plot" && frame.path) {
      for (const h of this.plotHandlers.get(frame.path) ?? []) {
        h(frame.payload?.time ?? 0, frame.payload?.value);
      }
    } else if (frame.op === "config_changed" && frame.path) {
      for (const h of this.configHandlers) {
        h(frame.path, frame.payload?.value, frame.payload?.revision ?? 0);
      }
    }
  }

  request(op: string, path: string | null = null, payload: any = null): Promise<Frame> {
    if (this.socket === null || !this.connected) {
      return Promise.reject(new GatewayError("not connected"));
    }
    const id = ++this.nextId;
    const promise = new Promise<Frame>((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
    });
    this.socket.send(encodeFrame({ op, id, path, payload }));
    return promise;
  }

  /** Fire-and-forget variant for high-rate command streams. */
  send(op: string, path: string | null = null, payload: any = null): void {
    if (this.socket === null || !this.connected) return;
    this.socket.send(encodeFrame({ op, id: ++this.nextId, path, payload }));
  }

  onTopic(path: string, handler: (stamp: number, value: any) => void): void {
    const list = this.topicHandlers.get(path) ?? [];
    list.push(handler);
    this.topicHandlers.set(path, list);
  }

  onPlot(path: string, handler: (time: number, value: any) => void): void {
    const list = this.plotHandlers.get(path) ?? [];
    list.push(handler);
    this.plotHandlers.set(path, list);
  }

  onConfigChanged(handler: (path: string, value: any, revision: number) => void): void {
    this.configHandlers.push(handler);
  }

  onState(handler: (connected: boolean) => void): void {
    this.stateHandlers.push(handler);
  }

  pendingCount(): number {
    return this.pending.size;
  }
}
