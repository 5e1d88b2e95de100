import init, { round_trip, accuracy_curve, arrangement, threshold } from "./pkg/lwm_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const big = (id) => BigInt(Math.max(0, Math.floor(num(id))));

function report(err) {
  $("status").textContent = String(err.message ?? err);
}

function runRoundTrip() {
  const r = round_trip(num("rt-k"), big("rt-seed"), $("rt-channel").value, $("rt-wrong").checked);
  $("rt-summary").textContent =
    `bit accuracy ${r.accuracy.toFixed(4)}, ${r.matches}/${r.k} bits match, ` +
    `tau=${r.tau} at FPR 1e-6: ${r.detected ? "detected" : "not detected"}`;
  const sent = r.embedded, got = r.recovered;
  const out = $("rt-bits");
  out.textContent = "";
  for (let i = 0; i < sent.length; i++) {
    const span = document.createElement("span");
    span.textContent = got[i];
    if (got[i] !== sent[i]) span.className = "bad";
    out.appendChild(span);
  }
}

function runCurve() {
  const sigmas = [];
  for (let s = 0; s <= 4.0001; s += 0.25) sigmas.push(s);
  const acc = accuracy_curve(num("cv-k"), new Float64Array(sigmas), num("cv-trials"), 1n);
  const c = $("cv-canvas"), g = c.getContext("2d");
  const pad = 40, w = c.width - 2 * pad, h = c.height - 2 * pad;
  const x = (s) => pad + (s / 4) * w;
  const y = (a) => pad + (1 - (a - 0.5) / 0.5) * h;
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#444";
  g.fillText("1.0", 10, y(1) + 4);
  g.fillText("0.5", 10, y(0.5) + 4);
  for (let s = 0; s <= 4; s++) g.fillText(`σ=${s}`, x(s) - 10, c.height - 12);
  g.strokeStyle = "#07c";
  g.beginPath();
  sigmas.forEach((s, i) => (i ? g.lineTo(x(s), y(acc[i])) : g.moveTo(x(s), y(acc[i]))));
  g.stroke();
  g.fillStyle = "#07c";
  sigmas.forEach((s, i) => g.fillRect(x(s) - 2, y(acc[i]) - 2, 4, 4));
}

function drawSigns(canvas, values) {
  // 16384 values as a 128x128 grid, scaled 2x.
  const side = Math.sqrt(values.length);
  const g = canvas.getContext("2d");
  const img = g.createImageData(side, side);
  values.forEach((v, i) => {
    const shade = v >= 0 ? 235 : 30;
    img.data.set([shade, shade, shade, 255], 4 * i);
  });
  const tmp = document.createElement("canvas");
  tmp.width = tmp.height = side;
  tmp.getContext("2d").putImageData(img, 0, 0);
  g.imageSmoothingEnabled = false;
  g.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function drawHistogram(canvas, values) {
  const bins = new Array(52).fill(0);
  for (const v of values) {
    const b = Math.floor((v + 4) / 8 * bins.length);
    if (b >= 0 && b < bins.length) bins[b]++;
  }
  const g = canvas.getContext("2d"), top = Math.max(...bins), bw = canvas.width / bins.length;
  g.clearRect(0, 0, canvas.width, canvas.height);
  g.fillStyle = "#07c";
  bins.forEach((n, i) => g.fillRect(i * bw, canvas.height * (1 - n / top), bw - 1, canvas.height * n / top));
}

function runArrangement() {
  const all = arrangement(num("ar-k"), big("ar-seed"));
  const r = all.length / 2;
  drawSigns($("ar-before"), all.subarray(0, r));
  drawSigns($("ar-after"), all.subarray(r));
  drawHistogram($("ar-hist"), all.subarray(r));
}

function wire(id, fn) {
  $(id).addEventListener("click", () => {
    try {
      fn();
      $("status").textContent = "";
    } catch (e) {
      report(e);
    }
  });
}

init().then(() => {
  $("status").textContent = `ready (tau for k=256 at FPR 1e-6 is ${threshold(256, 1e-6)})`;
  wire("rt-run", runRoundTrip);
  wire("cv-run", runCurve);
  wire("ar-run", runArrangement);
  runRoundTrip();
  runArrangement();
}, report);
