import init, { Tunneling } from "./pkg/pilot_wave_web.js";

const TOTAL_TIME = 6.0;
const canvas = document.getElementById("view");
const ctx = canvas.getContext("2d");
const status = document.getElementById("status");
const probeOut = document.getElementById("probe");
let sim = null;
let heat = null;

for (const id of ["height", "momentum"]) {
  const input = document.getElementById(id);
  input.addEventListener("input", () => (document.getElementById(id + "-out").textContent = input.value));
}

// x in the grid box, t in [0, end] mapped to canvas pixels, time upward
const toPx = (x) => ((x - sim.lower()) / (sim.upper() - sim.lower())) * canvas.width;
const toPy = (t) => canvas.height * (1 - t / sim.end_time());

function colour(s) {
  const stops = [[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]];
  const f = Math.min(Math.max(s, 0), 1) * (stops.length - 1);
  const i = Math.min(Math.floor(f), stops.length - 2);
  const w = f - i;
  return stops[i].map((a, k) => Math.round(a + w * (stops[i + 1][k] - a)));
}

function drawDensity() {
  const n = sim.points();
  const frames = sim.frames();
  const rho = sim.density();
  let peak = 0;
  for (const v of rho) peak = Math.max(peak, v);
  const img = ctx.createImageData(canvas.width, canvas.height);
  for (let py = 0; py < canvas.height; py++) {
    const r = Math.min(frames - 1, Math.floor((1 - py / canvas.height) * frames));
    for (let px = 0; px < canvas.width; px++) {
      const j = Math.min(n - 1, Math.floor((px / canvas.width) * n));
      const [red, green, blue] = colour(Math.sqrt(rho[r * n + j] / peak));
      const o = 4 * (py * canvas.width + px);
      img.data.set([red, green, blue, 255], o);
    }
  }
  ctx.putImageData(img, 0, 0);
  // barrier outline
  const v = sim.potential();
  const vmax = Math.max(...v);
  if (vmax > 0) {
    ctx.strokeStyle = "rgba(255,80,80,0.9)";
    ctx.beginPath();
    v.forEach((value, j) => {
      const px = (j / n) * canvas.width;
      const py = canvas.height - 0.25 * canvas.height * (value / vmax);
      j === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
  heat = ctx.getImageData(0, 0, canvas.width, canvas.height);
}

function evolve() {
  const height = Number(document.getElementById("height").value);
  const momentum = Number(document.getElementById("momentum").value);
  status.textContent = "evolving...";
  const t0 = performance.now();
  try {
    sim = new Tunneling(height, momentum, TOTAL_TIME);
  } catch (e) {
    status.textContent = "error: " + e;
    return;
  }
  drawDensity();
  status.textContent = `evolved ${sim.frames()} frames in ${((performance.now() - t0) / 1000).toFixed(2)} s`;
  probeOut.textContent = "";
}

function launch() {
  if (!sim) return;
  const n = Number(document.getElementById("paths").value);
  const seed = BigInt(document.getElementById("seed").value);
  status.textContent = "integrating...";
  const t0 = performance.now();
  let paths;
  try {
    paths = sim.trajectories(n, seed);
  } catch (e) {
    status.textContent = "error: " + e;
    return;
  }
  ctx.putImageData(heat, 0, 0);
  const frames = sim.frames();
  const dt = sim.end_time() / (frames - 1);
  ctx.strokeStyle = "rgba(255,255,255,0.8)";
  ctx.lineWidth = 0.8;
  for (let p = 0; p < n; p++) {
    ctx.beginPath();
    for (let i = 0; i < frames; i++) {
      const x = paths[p * frames + i];
      if (!Number.isFinite(x)) break;
      i === 0 ? ctx.moveTo(toPx(x), toPy(i * dt)) : ctx.lineTo(toPx(x), toPy(i * dt));
    }
    ctx.stroke();
  }
  status.textContent = `${n} paths in ${((performance.now() - t0) / 1000).toFixed(2)} s`;
}

canvas.addEventListener("click", (ev) => {
  if (!sim) return;
  const rect = canvas.getBoundingClientRect();
  const x = sim.lower() + ((ev.clientX - rect.left) / rect.width) * (sim.upper() - sim.lower());
  const t = (1 - (ev.clientY - rect.top) / rect.height) * sim.end_time();
  const [v, u] = sim.probe(x, t);
  const fmt = (z) => (Number.isFinite(z) ? z.toFixed(4) : "node");
  probeOut.textContent = `x = ${x.toFixed(3)}, t = ${t.toFixed(3)}: v = ${fmt(v)}, U = ${fmt(u)}`;
});

document.getElementById("evolve").addEventListener("click", evolve);
document.getElementById("launch").addEventListener("click", launch);

await init();
evolve();
