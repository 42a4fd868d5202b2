import { describe, expect, it } from "vitest";
import { decodeFrame, encodeFrame, errorMessage, isReply } from "../src/protocol.js";

describe("frame codec", () => {
  it("round-trips a request frame", () => {
    const text = encodeFrame({ op: "config_set", id: 3, path: "/gait/maxVelX",
                               payload: { value: 0.3 } });
    const back = decodeFrame(text);
    expect(back).toEqual({ op: "config_set", id: 3, path: "/gait/maxVelX",
                           payload: { value: 0.3 } });
  });

  it("rejects malformed input", () => {
    expect(decodeFrame("not json")).toBeNull();
    expect(decodeFrame("42")).toBeNull();
    expect(decodeFrame("[1,2]")).toBeNull();
    expect(decodeFrame("null")).toBeNull();
    expect(decodeFrame('{"id": 1}')).toBeNull(); // no op
  });

  it("classifies replies by op and id", () => {
    expect(isReply({ op: "ack", id: 1 })).toBe(true);
    expect(isReply({ op: "error", id: 9 })).toBe(true);
    expect(isReply({ op: "publish", path: "/x" })).toBe(false);
    expect(isReply({ op: "ack" })).toBe(false); // pushes carry no id
  });

  it("extracts error messages with a fallback", () => {
    expect(errorMessage({ op: "error", payload: { message: "boom" } })).toBe("boom");
    expect(errorMessage({ op: "error" })).toBe("unknown error");
  });
});
