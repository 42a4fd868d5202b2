/** Browser wiring: one gateway connection feeding all widgets.
 *
 * All behavior lives in the models (client, tuner, walk, timewarp,
 * plotter, fieldview, diagnostics); this file only moves values between
 * them and the DOM. Nothing here is unit-tested on purpose.
 */

import { GatewayClient, SocketLike } from "./client.js";
import { DiagnosticsModel } from "./diagnostics.js";
import { buildScene, FieldState, FieldTransform, Pose, Primitive } from "./fieldview.js";
import { SeriesStore } from "./plotter.js";
import { ParamDescriptor } from "./protocol.js";
import { TimewarpController } from "./timewarp.js";
import { ParamTuner } from "./tuner.js";
import { WalkController } from "./walk.js";

const browserSocket = (url: string): SocketLike => new WebSocket(url) as unknown as SocketLike;

const client = new GatewayClient(browserSocket);
const tuner = new ParamTuner();
const walk = new WalkController();
const timewarp = new TimewarpController();
const store = new SeriesStore();
const diagnostics = new DiagnosticsModel();

const fieldState: FieldState = {
  belief: null, truth: null, particles: null, detections: null, stale: false,
};
let beliefStamp = 0;
let nowStamp = 0;

const $ = (id: string) => document.getElementById(id)!;

function setBanner(text: string, visible: boolean): void {
  const el = $("banner");
  el.textContent = text;
  el.style.display = visible ? "block" : "none";
}

// -- walk control ------------------------------------------------------

function wireWalk(): void {
  const axes = ["vx", "vy", "omega"].map((id) => $(id) as HTMLInputElement);
  const read = () => walk.setAxes(...axes.map((a) => parseFloat(a.value)) as [number, number, number]);
  for (const a of axes) a.addEventListener("input", read);
  $("walk-start").addEventListener("click", () => walk.start());
  $("walk-stop").addEventListener("click", () => walk.stop());
  setInterval(() => {
    const frame = walk.tick(performance.now());
    if (frame) client.send(frame.op, frame.path ?? null, frame.payload);
    const enabled = walk.enabled;
    for (const a of axes) a.disabled = !enabled;
    ($("walk-start") as HTMLButtonElement).disabled = !enabled;
    ($("walk-stop") as HTMLButtonElement).disabled = !enabled;
    $("walk-state").textContent = !client.connected ? "disconnected"
      : !enabled ? "behavior owns gait" : walk.walking ? "walking" : "idle";
  }, 50);
}

// -- parameter tuner ---------------------------------------------------

function renderTuner(): void {
  const root = $("params");
  root.innerHTML = "";
  for (const [group, rows] of tuner.groups()) {
    const h = document.createElement("h3");
    h.textContent = group;
    root.appendChild(h);
    for (const row of rows) {
      const div = document.createElement("div");
      div.className = "param-row";
      const label = document.createElement("label");
      label.textContent = row.desc.path.split("/").pop() ?? row.desc.path;
      div.appendChild(label);
      const input = document.createElement("input");
      if (typeof row.value === "boolean") {
        input.type = "checkbox";
        input.checked = row.value;
      } else if (typeof row.value === "number") {
        input.type = "range";
        input.min = String(row.desc.min ?? row.value - 1);
        input.max = String(row.desc.max ?? row.value + 1);
        input.step = String(row.desc.step ?? 0.01);
        input.value = String(row.value);
      } else {
        input.type = "text";
        input.value = String(row.value);
      }
      input.dataset.path = row.desc.path;
      input.addEventListener("change", () => {
        const value = input.type === "checkbox" ? input.checked
          : input.type === "range" ? parseFloat(input.value) : input.value;
        const edit = tuner.beginEdit(row.desc.path, value);
        client.request("config_set", edit.path, edit.payload)
          .then((ack) => {
            const res = tuner.applyAck(row.desc.path, ack.payload.value);
            syncInput(input, res.value);
            if (res.clamped) toast(`${row.desc.path} clamped to ${res.value}`);
          })
          .catch((err) => {
            syncInput(input, tuner.applyError(row.desc.path));
            toast(String(err));
          });
      });
      div.appendChild(input);
      const valueEl = document.createElement("span");
      valueEl.id = `val:${row.desc.path}`;
      valueEl.textContent = String(row.value);
      div.appendChild(valueEl);
      root.appendChild(div);
    }
  }
}

function syncInput(input: HTMLInputElement, value: any): void {
  if (input.type === "checkbox") input.checked = Boolean(value);
  else input.value = String(value);
  const span = document.getElementById(`val:${input.dataset.path}`);
  if (span) span.textContent = String(value);
}

function toast(text: string): void {
  const el = $("toast");
  el.textContent = text;
  el.style.display = "block";
  setTimeout(() => { el.style.display = "none"; }, 2500);
}

// -- plotter -----------------------------------------------------------

const PLOT_PATHS_MAX = 4;
const plotted: string[] = [];

function drawPlots(): void {
  const canvas = $("plot") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const colors = ["#4af", "#fa4", "#4f8", "#f4a"];
  const cursor = timewarp.cursorTime();
  plotted.forEach((path, idx) => {
    const range = store.timeRange(path);
    if (!range) return;
    const [, t1] = range;
    const t0 = t1 - 30;
    const points = store.downsample(path, t0, t1, canvas.width);
    if (points.length === 0) return;
    let lo = Infinity;
    let hi = -Infinity;
    for (const p of points) { lo = Math.min(lo, p.min); hi = Math.max(hi, p.max); }
    if (hi - lo < 1e-9) { hi += 0.5; lo -= 0.5; }
    ctx.strokeStyle = colors[idx % colors.length];
    ctx.beginPath();
    for (const p of points) {
      const x = ((p.t - t0) / (t1 - t0)) * canvas.width;
      const y1 = canvas.height * (1 - (p.min - lo) / (hi - lo));
      const y2 = canvas.height * (1 - (p.max - lo) / (hi - lo));
      ctx.moveTo(x, y1);
      ctx.lineTo(x, y2 - 1);
    }
    ctx.stroke();
    if (cursor !== null) {
      const x = ((cursor - t0) / (t1 - t0)) * canvas.width;
      ctx.strokeStyle = "#fff";
      ctx.beginPath();
      ctx.moveTo(x, 0);
      ctx.lineTo(x, canvas.height);
      ctx.stroke();
      const s = store.floor(path, cursor);
      $("cursor-readout").textContent = s
        ? `t=${cursor.toFixed(2)}s ${path}=${s.v.toFixed(3)}` : "";
    }
  });
}

function wirePlotter(): void {
  const canvas = $("plot") as HTMLCanvasElement;
  canvas.addEventListener("mousedown", (ev) => pickCursor(ev));
  canvas.addEventListener("mousemove", (ev) => {
    if (ev.buttons & 1) pickCursor(ev);
  });
  $("plot-resume").addEventListener("click", () => {
    const change = timewarp.resume();
    client.send(change.frame.op, null, change.frame.payload);
  });
  $("plot-save").addEventListener("click", () => {
    client.request("bag_save", null, { file: `dashboard-${Date.now()}.bag` })
      .then((ack) => toast(`saved ${ack.payload.file} (${ack.payload.count} records)`))
      .catch((err) => toast(String(err)));
  });

  function pickCursor(ev: MouseEvent): void {
    if (plotted.length === 0) return;
    const range = store.timeRange(plotted[0]);
    if (!range) return;
    const [, t1] = range;
    const t0 = t1 - 30;
    const rect = canvas.getBoundingClientRect();
    const frac = (ev.clientX - rect.left) / rect.width;
    const change = timewarp.drag(t0 + frac * (t1 - t0));
    client.send(change.frame.op, null, change.frame.payload);
    if (change.clamped) toast("cursor clamped to retention window");
  }
}

// -- field view --------------------------------------------------------

function drawField(): void {
  const canvas = $("field") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const tf = new FieldTransform(canvas.width, canvas.height);
  ctx.fillStyle = "#163";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const cursor = timewarp.cursorTime();
  const state: FieldState = { ...fieldState };
  if (cursor !== null) {
    state.belief = poseAt("/pose/belief", cursor) ?? state.belief;
    state.truth = poseAt("/pose/truth", cursor) ?? state.truth;
    state.particles = null;
    state.detections = null;
  } else {
    state.stale = nowStamp - beliefStamp > 1.0;
  }
  for (const prim of buildScene(state)) drawPrimitive(ctx, tf, prim);
}

function poseAt(prefix: string, t: number): Pose | null {
  const x = store.floor(`${prefix}/x`, t);
  const y = store.floor(`${prefix}/y`, t);
  const theta = store.floor(`${prefix}/theta`, t);
  return x && y && theta ? { x: x.v, y: y.v, theta: theta.v } : null;
}

const STYLES: Record<string, string> = {
  line: "#dfe", post: "#fd0", particle: "#aaf", truth: "#0f0",
  belief: "#fff", "belief-stale": "#888", ball: "#f80",
};

function drawPrimitive(ctx: CanvasRenderingContext2D, tf: FieldTransform, prim: Primitive): void {
  const color = STYLES[prim.style] ?? "#f0f";
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  if (prim.kind === "line") {
    const [x1, y1] = tf.toCanvas(prim.x1, prim.y1);
    const [x2, y2] = tf.toCanvas(prim.x2, prim.y2);
    ctx.beginPath(); ctx.moveTo(x1, y1); ctx.lineTo(x2, y2); ctx.stroke();
  } else if (prim.kind === "circle") {
    const [x, y] = tf.toCanvas(prim.x, prim.y);
    ctx.beginPath(); ctx.arc(x, y, prim.r * tf.scale, 0, 2 * Math.PI); ctx.stroke();
  } else if (prim.kind === "dot") {
    const [x, y] = tf.toCanvas(prim.x, prim.y);
    ctx.fillRect(x - 1.5, y - 1.5, 3, 3);
  } else {
    const [x, y] = tf.toCanvas(prim.x, prim.y);
    const hx = x + 12 * Math.cos(-prim.theta);
    const hy = y + 12 * Math.sin(-prim.theta);
    ctx.beginPath(); ctx.arc(x, y, 5, 0, 2 * Math.PI); ctx.stroke();
    ctx.beginPath(); ctx.moveTo(x, y); ctx.lineTo(hx, hy); ctx.stroke();
  }
}

// -- diagnostics -------------------------------------------------------

function wireDiagnostics(): void {
  for (const dir of ["in", "out"] as const) {
    $(`fade-${dir}`).addEventListener("click", () => {
      const frame = diagnostics.fadeFrame(dir);
      client.request(frame.op, frame.path ?? null, frame.payload)
        .then((ack) => toast(`fade ${dir}: ${JSON.stringify(ack.payload.result)}`))
        .catch((err) => toast(String(err)));
    });
  }
  setInterval(() => {
    const root = $("diag");
    root.innerHTML = "";
    for (const row of diagnostics.rows(nowStamp)) {
      const div = document.createElement("div");
      div.textContent = `${row.label}: ${row.text}`;
      if (row.alert) div.className = "alert";
      root.appendChild(div);
    }
  }, 250);
}

// -- startup -----------------------------------------------------------

function subscribeAll(): void {
  client.request("hello").catch(() => undefined);
  client.request("config_list").then((ack) => {
    tuner.loadList(ack.payload.params as ParamDescriptor[]);
    renderTuner();
  }).catch((err) => toast(String(err)));

  client.onConfigChanged((path, value, revision) => {
    if (tuner.applyRemote(path, value, revision)) {
      const input = document.querySelector<HTMLInputElement>(`[data-path="${CSS.escape(path)}"]`);
      if (input) syncInput(input, value);
    }
  });

  client.request("subscribe", "/behavior/activations", { rate: 10 })
    .catch(() => undefined);
  client.onTopic("/behavior/activations", (_stamp, value) => walk.updateActivations(value));

  client.request("subscribe", "/diagnostics", { rate: 10 }).catch(() => undefined);
  client.onTopic("/diagnostics", (stamp, value) => {
    nowStamp = Math.max(nowStamp, stamp);
    timewarp.observe(stamp);
    diagnostics.update(stamp, value);
  });

  client.request("subscribe", "/localization/pose", { rate: 10 }).catch(() => undefined);
  client.onTopic("/localization/pose", (stamp, value) => {
    beliefStamp = stamp;
    nowStamp = Math.max(nowStamp, stamp);
    timewarp.observe(stamp);
    fieldState.belief = { x: value.mean[0], y: value.mean[1], theta: value.mean[2] };
    store.append("/pose/belief/x", stamp, value.mean[0]);
    store.append("/pose/belief/y", stamp, value.mean[1]);
    store.append("/pose/belief/theta", stamp, value.mean[2]);
  });

  client.request("subscribe", "/sim/truth", { rate: 10 }).catch(() => undefined);
  client.onTopic("/sim/truth", (stamp, value) => {
    fieldState.truth = { x: value.robot[0], y: value.robot[1], theta: value.robot[2] };
    store.append("/pose/truth/x", stamp, value.robot[0]);
    store.append("/pose/truth/y", stamp, value.robot[1]);
    store.append("/pose/truth/theta", stamp, value.robot[2]);
  });

  client.request("subscribe", "/vision/detections", { rate: 10 }).catch(() => undefined);
  client.onTopic("/vision/detections", (_stamp, value) => {
    fieldState.detections = [
      ...(value.balls ?? []), ...(value.posts ?? []),
      ...(value.obstacles ?? []), ...(value.crossings ?? []),
    ];
  });

  client.request("plot_tree").then((ack) => {
    for (const path of (ack.payload.paths as string[]).slice(0, PLOT_PATHS_MAX)) {
      plotted.push(path);
      client.request("plot_stream", path, { rate: 20 }).catch(() => undefined);
      client.onPlot(path, (t, v) => {
        timewarp.observe(t);
        store.append(path, t, v);
      });
    }
    $("plot-legend").textContent = plotted.join("  ");
  }).catch(() => undefined);
}

function start(): void {
  const url = new URLSearchParams(location.search).get("gateway")
    ?? `ws://${location.hostname || "127.0.0.1"}:8765`;
  client.onState((connected) => {
    walk.connectionChanged(connected);
    setBanner("gateway disconnected", !connected);
    if (connected) subscribeAll();
  });
  client.connect(url);
  wireWalk();
  wirePlotter();
  wireDiagnostics();
  setInterval(() => { drawPlots(); drawField(); }, 100);
}

start();
