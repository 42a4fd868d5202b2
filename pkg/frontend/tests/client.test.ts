import { describe, expect, it } from "vitest";
import { GatewayClient, SocketLike } from "../src/client.js";

class FakeSocket implements SocketLike {
  sent: any[] = [];
  onmessage: ((ev: { data: string }) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  closed = false;

  send(data: string): void {
    this.sent.push(JSON.parse(data));
  }

  close(): void {
    this.closed = true;
  }

  open(): void {
    this.onopen?.();
  }

  push(frame: any): void {
    this.onmessage?.({ data: JSON.stringify(frame) });
  }
}

function connected(): [GatewayClient, FakeSocket] {
  let sock!: FakeSocket;
  const client = new GatewayClient(() => (sock = new FakeSocket()));
  client.connect("ws://test");
  sock.open();
  return [client, sock];
}

describe("GatewayClient", () => {
  it("resolves requests on the matching ack id", async () => {
    const [client, sock] = connected();
    const p1 = client.request("hello");
    const p2 = client.request("config_get", "/gait/maxVelX");
    expect(sock.sent.map((f) => f.id)).toEqual([1, 2]);
    // out-of-order replies still land on the right caller
    sock.push({ op: "ack", id: 2, payload: { value: 0.2 } });
    sock.push({ op: "ack", id: 1, payload: { version: 1 } });
    expect((await p2).payload.value).toBe(0.2);
    expect((await p1).payload.version).toBe(1);
    expect(client.pendingCount()).toBe(0);
  });

  it("rejects on error frames with the server message", async () => {
    const [client, sock] = connected();
    const p = client.request("query", "/nope");
    sock.push({ op: "error", id: 1, payload: { message: "unknown series" } });
    await expect(p).rejects.toThrow("unknown series");
  });

  it("routes pushes to per-path handlers", () => {
    const [client, sock] = connected();
    const got: any[] = [];
    client.onTopic("/diagnostics", (stamp, value) => got.push([stamp, value]));
    client.onPlot("/battery", (t, v) => got.push(["plot", t, v]));
    sock.push({ op: "publish", path: "/diagnostics",
                payload: { stamp: 1.5, value: { battery: 12 } } });
    sock.push({ op: "publish", path: "/other", payload: { stamp: 0, value: 0 } });
    sock.push({ op: "plot", path: "/battery", payload: { time: 2, value: 11.9 } });
    expect(got).toEqual([[1.5, { battery: 12 }], ["plot", 2, 11.9]]);
  });

  it("fans config changes out to handlers", () => {
    const [client, sock] = connected();
    const got: any[] = [];
    client.onConfigChanged((path, value, revision) => got.push([path, value, revision]));
    sock.push({ op: "config_changed", path: "/gait/maxVelX",
                payload: { value: 0.5, revision: 7 } });
    expect(got).toEqual([["/gait/maxVelX", 0.5, 7]]);
  });

  it("ignores malformed frames and unknown reply ids", () => {
    const [client, sock] = connected();
    sock.onmessage?.({ data: "garbage" });
    sock.push({ op: "ack", id: 99 });
    expect(client.pendingCount()).toBe(0);
  });

  it("rejects everything pending when the connection drops", async () => {
    const [client, sock] = connected();
    const p = client.request("hello");
    sock.onclose?.();
    await expect(p).rejects.toThrow("connection closed");
    expect(client.connected).toBe(false);
    await expect(client.request("hello")).rejects.toThrow("not connected");
  });

  it("notifies state handlers on connect and disconnect", () => {
    let sock!: FakeSocket;
    const client = new GatewayClient(() => (sock = new FakeSocket()));
    const states: boolean[] = [];
    client.onState((c) => states.push(c));
    client.connect("ws://test");
    sock.open();
    sock.onclose?.();
    expect(states).toEqual([true, false]);
  });
});
