import init, { effective_tensors, macro_pulse, ionic_report } from "../pkg/tridomain_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function fail(el, err) {
  el.innerHTML = "";
  const p = document.createElement("p");
  p.className = "error";
  p.textContent = String(err);
  el.appendChild(p);
}

function showTensors() {
  const out = $("t-out");
  try {
    const t = effective_tensors($("t-layout").value, num("t-lo"), num("t-hi"), num("t-n"), num("t-m"));
    const rows = ["I1", "I2", "E"].map((name, k) =>
      `<tr><th>${name}</th>${[0, 1, 2].map((j) => `<td>${t[3 * k + j].toFixed(6)}</td>`).join("")}</tr>`);
    out.innerHTML = `<table><tr><th></th><th>m11</th><th>m12</th><th>m22</th></tr>${rows.join("")}</table>`;
  } catch (e) {
    fail(out, e);
  }
}

// Blue for negative, red for positive, scaled by the largest magnitude.
function color(v, scale) {
  const x = Math.max(-1, Math.min(1, v / scale));
  const c = Math.round(255 * (1 - Math.abs(x)));
  return x >= 0 ? [255, c, c] : [c, c, 255];
}

function showPulse() {
  const out = $("m-out");
  const n = num("m-n");
  let v;
  try {
    v = macro_pulse($("m-layout").value, n, num("m-g"), num("m-t"), num("m-d"));
  } catch (e) {
    fail(out, e);
    return;
  }
  const side = n + 1;
  const canvas = $("m-canvas");
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(side, side);
  const scale = Math.max(1e-12, ...v.map(Math.abs));
  for (let j = 0; j < side; j++) {
    for (let i = 0; i < side; i++) {
      const [r, g, b] = color(v[j * side + i], scale);
      const p = 4 * ((side - 1 - j) * side + i);
      img.data.set([r, g, b, 255], p);
    }
  }
  const tmp = new OffscreenCanvas(side, side);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
  out.textContent = `max |v1| = ${scale.toExponential(3)}`;
}

function showIonic() {
  const out = $("i-out");
  try {
    out.className = "";
    out.textContent = ionic_report(num("i-a"), num("i-l"), num("i-b"), num("i-e"), num("i-k"), 2000);
  } catch (e) {
    out.className = "error";
    out.textContent = String(e);
  }
}

await init();
$("t-run").addEventListener("click", showTensors);
$("m-run").addEventListener("click", showPulse);
$("i-run").addEventListener("click", showIonic);
showTensors();
showIonic();
