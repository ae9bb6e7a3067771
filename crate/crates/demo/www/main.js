import init, { Reconstruction, intervalsJson } from "./pkg/mvs_demo.js";

const LAYERS = ["reference", "depth", "truth", "error", "confidence"];
const $ = (id) => document.getElementById(id);
let recon = null;
let probePixel = null;

function slider(container, spec, onChange) {
  const label = document.createElement("label");
  label.textContent = spec.label;
  const input = document.createElement("input");
  Object.assign(input, { type: "range", min: spec.min, max: spec.max, step: spec.step, value: spec.value });
  const out = document.createElement("span");
  const update = () => { out.textContent = input.value; onChange(); };
  input.addEventListener("input", update);
  out.textContent = input.value;
  container.append(label, input, out);
  return () => parseFloat(input.value);
}

function showError(el, err) {
  el.innerHTML = "";
  const p = document.createElement("p");
  p.className = "error";
  p.textContent = String(err.message ?? err);
  el.append(p);
}

function drawLayers() {
  const box = $("layers");
  box.innerHTML = "";
  for (const kind of LAYERS) {
    const fig = document.createElement("figure");
    const canvas = document.createElement("canvas");
    canvas.className = "layer";
    canvas.width = recon.width;
    canvas.height = recon.height;
    const rgba = new Uint8ClampedArray(recon.layerRgba(kind));
    canvas.getContext("2d").putImageData(new ImageData(rgba, recon.width, recon.height), 0, 0);
    canvas.addEventListener("click", (e) => {
      const r = canvas.getBoundingClientRect();
      probePixel = [
        Math.floor(((e.clientX - r.left) / r.width) * recon.width),
        Math.floor(((e.clientY - r.top) / r.height) * recon.height),
      ];
      drawProbe();
    });
    const cap = document.createElement("figcaption");
    cap.textContent = kind === "error" ? "error (0 to 4 spacings)" : kind;
    fig.append(canvas, cap);
    box.append(fig);
  }
}

function drawSummary() {
  const s = JSON.parse(recon.summaryJson());
  const rows = s.stages.map((st) => `<tr><td>${st.stage} ${st.strategy}</td><td>${st.width}x${st.height}</td>
    <td>${st.hypotheses}</td><td>${st.width_median.toFixed(2)}</td><td>${st.median_spacing.toFixed(3)}</td>
    <td>${st.mean_confidence.toFixed(3)}</td><td>${(st.seconds * 1000).toFixed(0)}</td></tr>`).join("");
  $("summary").innerHTML = `<p>Within 1 / 2 / 4 final spacings (${s.spacing.toFixed(3)}):
    <b>${(100 * s.within_1).toFixed(1)}%</b> / ${(100 * s.within_2).toFixed(1)}% / ${(100 * s.within_4).toFixed(1)}%,
    mean |error| ${s.mean_abs.toFixed(3)}</p>
    <table><tr><th>stage</th><th>size</th><th>hypotheses</th><th>median width</th><th>spacing</th>
    <th>confidence</th><th>ms</th></tr>${rows}</table>`;
}

function run() {
  $("status").textContent = "running...";
  setTimeout(() => {
    try {
      recon?.free();
      recon = new Reconstruction($("preset").value, parseInt($("levels").value, 10),
        $("strategy").value, $("auf").checked, parseInt($("seed").value, 10));
      drawLayers();
      drawSummary();
      probePixel ??= [Math.floor(recon.width / 2), Math.floor(recon.height / 2)];
      drawProbe();
      $("status").textContent = "";
    } catch (err) {
      recon = null;
      $("status").textContent = "";
      showError($("summary"), err);
    }
  }, 10);
}

const probeParams = {};
function drawProbe() {
  if (!recon || !probePixel) return;
  let p;
  try {
    p = JSON.parse(recon.probeJson(probePixel[0], probePixel[1], probeParams.alphaC(), probeParams.betaC(),
      probeParams.alpha(), probeParams.beta()));
  } catch (err) {
    showError($("probe-info"), err);
    return;
  }
  const c = $("probe");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const d = p.depths;
  const lo = d[0], hi = d[d.length - 1];
  const x = (v) => 20 + ((v - lo) / (hi - lo)) * (c.width - 40);
  const top = Math.max(...p.before.probs, ...p.after.probs);
  const base = 190, bw = Math.max(2, (c.width - 40) / d.length - 2);
  d.forEach((v, j) => {
    g.fillStyle = "#bbb";
    const hb = (p.before.probs[j] / top) * 170;
    g.fillRect(x(v) - bw / 2, base - hb, bw / 2, hb);
    g.fillStyle = "#2c6fbb";
    const ha = (p.after.probs[j] / top) * 170;
    g.fillRect(x(v), base - ha, bw / 2, ha);
  });
  g.setLineDash([4, 3]);
  g.strokeStyle = "#c00";
  g.beginPath();
  g.moveTo(x(p.truth), 10);
  g.lineTo(x(p.truth), base);
  g.stroke();
  g.setLineDash([]);
  const band = (iv, y, color) => {
    g.fillStyle = color;
    const a = x(Math.max(lo, iv[0])), b = x(Math.min(hi, iv[1]));
    g.fillRect(a, y, Math.max(1, b - a), 12);
  };
  band(p.before.interval, 205, "#999");
  band(p.after.interval, 225, "#2c6fbb");
  g.fillStyle = "#333";
  g.fillText(lo.toFixed(0), 4, 255);
  g.fillText(hi.toFixed(0), c.width - 36, 255);
  $("probe-info").textContent =
    `pixel (${probePixel[0]}, ${probePixel[1]}), confidence ${p.confidence.toFixed(3)}, truth ${p.truth.toFixed(2)}; ` +
    `before: mean ${p.before.mean.toFixed(2)} std ${p.before.std.toFixed(2)}; ` +
    `after: mean ${p.after.mean.toFixed(2)} std ${p.after.std.toFixed(2)}`;
}

const iv = {};
function drawIntervals() {
  let r;
  try {
    r = JSON.parse(intervalsJson(iv.depth(), iv.sigma() ** 2, iv.alpha(), iv.beta(), iv.focal(), iv.baseline(),
      iv.step(), Math.round(iv.count())));
  } catch (err) {
    showError($("interval-info"), err);
    return;
  }
  const c = $("intervals");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const lo = Math.min(r.variance[0], r.epipolar[0]);
  const hi = Math.max(r.variance[1], r.epipolar[1]);
  const pad = 0.1 * (hi - lo || 1);
  const x = (v) => 20 + ((v - lo + pad) / (hi - lo + 2 * pad)) * (c.width - 40);
  g.fillStyle = "#2c6fbb";
  g.fillRect(x(r.variance[0]), 20, x(r.variance[1]) - x(r.variance[0]), 20);
  g.fillStyle = "#e08a1e";
  g.fillRect(x(r.epipolar[0]), 60, x(r.epipolar[1]) - x(r.epipolar[0]), 20);
  g.fillStyle = "#000";
  for (const s of r.epipolar_samples) g.fillRect(x(s) - 1, 56, 2, 28);
  g.strokeStyle = "#c00";
  g.beginPath();
  g.moveTo(x(iv.depth()), 10);
  g.lineTo(x(iv.depth()), 95);
  g.stroke();
  g.fillStyle = "#333";
  g.fillText(`variance [${r.variance[0].toFixed(2)}, ${r.variance[1].toFixed(2)}]`, 20, 115);
  g.fillText(`epipolar [${r.epipolar[0].toFixed(2)}, ${r.epipolar[1].toFixed(2)}]`, 320, 115);
  $("interval-info").textContent =
    `linearized epipolar half-width (D/2)·δ·d²/(f·B) = ${r.closed_form_half_width.toFixed(3)}`;
}

await init();

const ps = $("probe-sliders");
probeParams.alphaC = slider(ps, { label: "filter α_c", min: 0, max: 40, step: 0.5, value: 13 }, drawProbe);
probeParams.betaC = slider(ps, { label: "filter β_c", min: 0.5, max: 40, step: 0.5, value: 9 }, drawProbe);
probeParams.alpha = slider(ps, { label: "interval α", min: 0, max: 4, step: 0.1, value: 1 }, drawProbe);
probeParams.beta = slider(ps, { label: "interval β", min: 0, max: 40, step: 1, value: 0 }, drawProbe);

const is = $("interval-sliders");
iv.depth = slider(is, { label: "depth d", min: 100, max: 1000, step: 1, value: 600 }, drawIntervals);
iv.sigma = slider(is, { label: "std √V", min: 0, max: 60, step: 0.5, value: 10 }, drawIntervals);
iv.alpha = slider(is, { label: "α", min: 0, max: 4, step: 0.1, value: 1 }, drawIntervals);
iv.beta = slider(is, { label: "β", min: 0, max: 40, step: 1, value: 0 }, drawIntervals);
iv.focal = slider(is, { label: "focal f (px)", min: 50, max: 1000, step: 10, value: 300 }, drawIntervals);
iv.baseline = slider(is, { label: "baseline B", min: 10, max: 300, step: 5, value: 120 }, drawIntervals);
iv.step = slider(is, { label: "step δ (px)", min: 0.1, max: 2, step: 0.1, value: 0.5 }, drawIntervals);
iv.count = slider(is, { label: "samples D", min: 2, max: 32, step: 1, value: 8 }, drawIntervals);

$("run").addEventListener("click", run);
drawIntervals();
run();
