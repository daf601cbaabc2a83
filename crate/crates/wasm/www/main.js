// Build with:
//   cargo build --release --target wasm32-unknown-unknown -p homoclinic-wasm
//   wasm-bindgen --target web --out-dir www/pkg target/wasm32-unknown-unknown/release/homoclinic_wasm.wasm
import init, { frame, b_curve, conditions } from "./pkg/homoclinic_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function request(extra) {
  const kind = $("field").value;
  const field = { kind, nu: num("nu"), mu: num("mu"), p: num("p") };
  if (kind === "powerlaw-rotated") field.angle = 0.4;
  if (kind === "powerlaw-level-damped") field.c = 0.3;
  const forcing = {
    a1: { kind: "a1" },
    cos: { kind: "cos", amplitude: 1, frequency: 1 },
    const: { kind: "const", c: 1 },
    none: { kind: "none" },
  }[$("forcing").value];
  return JSON.stringify({ field, forcing, window: num("window"), ...extra });
}

function call(f, req) {
  $("error").textContent = "";
  try {
    return JSON.parse(f(req));
  } catch (e) {
    $("error").textContent = String(e.message ?? e);
    return null;
  }
}

function axes(ctx, xs, ys, pad = 30) {
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const { width: w, height: h } = ctx.canvas;
  ctx.clearRect(0, 0, w, h);
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  if (y0 < 0 && y1 > 0) { ctx.moveTo(pad, sy(0)); ctx.lineTo(w - pad, sy(0)); }
  if (x0 < 0 && x1 > 0) { ctx.moveTo(sx(0), pad); ctx.lineTo(sx(0), h - pad); }
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText(`${x0.toPrecision(3)} … ${x1.toPrecision(3)}`, pad, h - 8);
  ctx.fillText(`${y0.toPrecision(3)} … ${y1.toPrecision(3)}`, 4, 12);
  return [sx, sy];
}

function polyline(ctx, pts, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.stroke();
}

function drawFrame() {
  const out = call(frame, request({ max_points: 600 }));
  if (!out) return;
  const ctx = $("orbit").getContext("2d");
  const xs = out.rows.map((r) => r[1]);
  const ys = out.rows.map((r) => r[2]);
  const [sx, sy] = axes(ctx, xs, ys);
  polyline(ctx, out.rows.map((r) => [sx(r[1]), sy(r[2])]), "#1f4e9c");
  // Short ζ directions at every 40th row, where they stay readable.
  ctx.strokeStyle = "#c05621";
  out.rows.filter((_, i) => i % 40 === 0).forEach((r) => {
    const n = Math.hypot(r[3], r[4]) || 1;
    ctx.beginPath();
    ctx.moveTo(sx(r[1]), sy(r[2]));
    ctx.lineTo(sx(r[1]) + (18 * r[3]) / n, sy(r[2]) - (18 * r[4]) / n);
    ctx.stroke();
  });
  const d = out.diagnostics;
  $("frame-info").textContent =
    `ω = ${out.omega.toPrecision(6)}, Wronskian variation ${d.delta_variation.toExponential(2)}, ` +
    `end gap ${d.end_gap_rel.toExponential(2)}`;
}

function drawB() {
  const slice = {
    variable: $("variable").value, lo: num("lo"), hi: num("hi"), samples: num("samples"),
  };
  const out = call(b_curve, request({ slice, epsilon: num("epsilon") }));
  if (!out) return;
  const ok = out.samples.filter((s) => s.value !== null);
  const ctx = $("bcurve").getContext("2d");
  const [sx, sy] = axes(ctx, out.samples.map((s) => s.s), ok.length ? ok.map((s) => s.value) : [0]);
  polyline(ctx, ok.map((s) => [sx(s.s), sy(s.value)]), "#1f4e9c");
  ctx.fillStyle = "#a4161a";
  out.samples.filter((s) => s.value === null).forEach((s) => ctx.fillRect(sx(s.s) - 2, sy(0) - 2, 4, 4));
  ctx.fillStyle = "#17692b";
  out.roots.forEach((r) => ctx.fillRect(sx(r.value) - 3, sy(0) - 3, 6, 6));
  const failed = out.samples.length - ok.length;
  $("roots").textContent =
    (out.roots.length ? `roots: ${out.roots.map((r) => r.value.toPrecision(8)).join(", ")}` : "no roots") +
    (failed ? `; ${failed} samples failed (red)` : "");
}

function drawConditions() {
  const out = call(conditions, request({ beta: num("beta") }));
  if (!out) return;
  $("verdicts").innerHTML =
    "<tr><th>condition</th><th>verdict</th></tr>" +
    out.verdicts.map((v) => `<tr><td>${v.name}</td><td class="${v.verdict}">${v.verdict}</td></tr>`).join("");
}

await init();
$("run-frame").onclick = drawFrame;
$("run-b").onclick = drawB;
$("run-conditions").onclick = drawConditions;
drawFrame();
drawConditions();
