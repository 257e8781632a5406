import init, { uncertainty_sets, schedule, thermal_response } from "./pkg/jcc_sched_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = { svc: "#c0392b", hull: "#2471a3", box: "#7d7d7d" };

function frame(canvas, xr, yr, pad = 40) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const w = canvas.width - 2 * pad, h = canvas.height - 2 * pad;
  const sx = (x) => pad + ((x - xr[0]) / (xr[1] - xr[0])) * w;
  const sy = (y) => pad + h - ((y - yr[0]) / (yr[1] - yr[0])) * h;
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w, h);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  for (let k = 0; k <= 4; k++) {
    const x = xr[0] + (k / 4) * (xr[1] - xr[0]);
    const y = yr[0] + (k / 4) * (yr[1] - yr[0]);
    ctx.fillText(x.toFixed(2), sx(x) - 12, pad + h + 14);
    ctx.fillText(y.toFixed(2), 2, sy(y) + 4);
  }
  return { ctx, sx, sy };
}

function polyline(f, pts, color, close = false, width = 2) {
  const { ctx, sx, sy } = f;
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
  if (close) ctx.closePath();
  ctx.stroke();
  ctx.lineWidth = 1;
}

function range(values, padFrac = 0.05) {
  let lo = Math.min(...values), hi = Math.max(...values);
  const pad = (hi - lo || 1) * padFrac;
  return [lo - pad, hi + pad];
}

function call(fn, params, out) {
  try {
    out.classList.remove("err");
    return JSON.parse(fn(JSON.stringify(params)));
  } catch (e) {
    out.textContent = String(e);
    out.classList.add("err");
    return null;
  }
}

function drawSets() {
  const eps = Number($("s-eps").value);
  $("s-eps-v").textContent = eps.toFixed(2);
  const out = $("s-out");
  const r = call(uncertainty_sets, { dist: $("s-dist").value, n: Number($("s-n").value), epsilon: eps, seed: Number($("s-seed").value) }, out);
  if (!r) return;
  const all = r.samples.concat(...r.sets.map((s) => s.boundary));
  const xr = range(all.map((p) => p[0])), yr = range(all.map((p) => p[1]));
  const f = frame($("s-canvas"), xr, yr);
  f.ctx.fillStyle = "rgba(0,0,0,0.35)";
  for (const [x, y] of r.samples) f.ctx.fillRect(f.sx(x) - 1, f.sy(y) - 1, 2, 2);
  for (const s of r.sets) polyline(f, s.boundary, COLORS[s.method], true);
  out.textContent = r.sets
    .map((s) => `${s.method}: area ${s.area.toFixed(4)}, covers ${s.covered}/${r.samples.length}`)
    .join("   ");
}

function drawSchedule() {
  const out = $("p-out");
  out.textContent = "solving...";
  setTimeout(() => {
    const t0 = performance.now();
    const r = call(schedule, {
      dist: $("p-dist").value, method: $("p-method").value, epsilon: Number($("p-eps").value),
      n: Number($("p-n").value), seed: 12, theta_lo: Number($("p-lo").value),
    }, out);
    if (!r) return;
    const c = $("p-canvas");
    c.getContext("2d").clearRect(0, 0, c.width, c.height);
    const hours = r.price_buy.map((_, t) => t);
    const half = { width: c.width / 2, height: c.height };
    // left: renewable output used vs available
    const left = document.createElement("canvas");
    Object.assign(left, half);
    const avail = r.drg_nominal.map((g) => g);
    const used = r.drg_nominal.map((g, j) => g.map((v, t) => v * r.lambda[j][t]));
    const f1 = frame(left, [0, 23], range(avail.flat().concat([0])));
    avail.forEach((g) => polyline(f1, hours.map((t) => [t, g[t]]), "#bbb"));
    used.forEach((g, j) => polyline(f1, hours.map((t) => [t, g[t]]), j ? "#27ae60" : "#16a085"));
    f1.ctx.fillStyle = "#222";
    f1.ctx.fillText("DRG output used (colour) vs available (grey), MW", 45, 30);
    // right: indoor temperatures and the comfort band
    const right = document.createElement("canvas");
    Object.assign(right, half);
    const f2 = frame(right, [0, 24], [r.theta_lo - 1, r.theta_hi + 1]);
    polyline(f2, [[0, r.theta_lo], [24, r.theta_lo]], "#e67e22", false, 1);
    polyline(f2, [[0, r.theta_hi], [24, r.theta_hi]], "#e67e22", false, 1);
    r.theta.forEach((th) => polyline(f2, th.map((v, t) => [t, v]), "rgba(41,128,185,0.6)", false, 1));
    const peak = r.price_buy.indexOf(Math.max(...r.price_buy));
    polyline(f2, [[peak, r.theta_lo - 1], [peak, r.theta_hi + 1]], "#c0392b", false, 1);
    f2.ctx.fillStyle = "#222";
    f2.ctx.fillText("indoor temperature, comfort band, price peak (red)", 45, 30);
    const ctx = c.getContext("2d");
    ctx.drawImage(left, 0, 0);
    ctx.drawImage(right, c.width / 2, 0);
    out.textContent = `cost ${r.cost.toFixed(2)} $, DRG utilization ${(100 * r.utilization).toFixed(2)} %, ` +
      `${r.iterations} solver iterations, ${((performance.now() - t0) / 1000).toFixed(1)} s`;
  }, 10);
}

function drawThermal() {
  for (const k of ["c", "r", "cop", "p"]) $(`t-${k}-v`).textContent = $(`t-${k}`).value;
  const p = Number($("t-p").value);
  const out = $("t-out");
  const r = call(thermal_response, {
    heat_capacity: Number($("t-c").value), thermal_resistance: Number($("t-r").value),
    cop: Number($("t-cop").value), theta_init: 26, p_hvac: Array(24).fill(p),
  }, out);
  if (!r) return;
  const yr = range(r.theta.concat(r.theta_out));
  const f = frame($("t-canvas"), [0, 24], yr);
  polyline(f, r.theta_out.map((v, t) => [t, v]), "#e67e22");
  polyline(f, r.theta.map((v, t) => [t, v]), "#2980b9");
  out.textContent = `indoor (blue) ${Math.min(...r.theta).toFixed(2)} to ${Math.max(...r.theta).toFixed(2)} °C; outdoor in orange`;
}

await init();
for (const id of ["s-dist", "s-n", "s-eps", "s-seed"]) $(id).addEventListener("input", drawSets);
for (const id of ["t-c", "t-r", "t-cop", "t-p"]) $(id).addEventListener("input", drawThermal);
$("p-run").addEventListener("click", drawSchedule);
drawSets();
drawThermal();
