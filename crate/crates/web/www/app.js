import init, { limits, sensitivity, run_length } from "./pkg/robust_xbar_web.js";

const PISTON_RINGS = [
  [74.030, 74.002, 74.019, 73.992, 74.008],
  [73.995, 73.992, 74.001],
  [73.988, 74.024, 74.021, 74.005, 74.002],
  [74.002, 73.996, 73.993, 74.015, 74.009],
  [73.992, 74.007, 74.015, 73.989, 74.014],
  [74.009, 73.994, 73.997, 73.985],
  [73.995, 74.006, 73.994, 74.000],
  [73.985, 74.003, 73.993, 74.015, 73.988],
  [74.008, 73.995, 74.009, 74.005],
  [73.998, 74.000, 73.990, 74.007, 73.995],
  [73.994, 73.998, 73.994, 73.995, 73.990],
  [74.004, 74.000, 74.007, 74.000, 73.996],
  [73.983, 74.002, 73.998],
  [74.006, 73.967, 73.994, 74.000, 73.984],
  [74.012, 74.014, 73.998],
  [74.000, 73.984, 74.005, 73.998, 73.996],
  [73.994, 74.012, 73.986, 74.005],
  [74.006, 74.010, 74.018, 74.003, 74.000],
  [73.984, 74.002, 74.003, 74.005, 73.997],
  [74.000, 74.010, 74.013],
  [73.982, 74.001, 74.015, 74.005, 73.996],
  [74.004, 73.999, 73.990, 74.006, 74.009],
  [74.010, 73.989, 73.990, 74.009, 74.014],
  [74.015, 74.008, 73.993, 74.000, 74.010],
  [73.982, 73.984, 73.995, 74.017, 74.013],
];

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function csvText() {
  const lines = ["sample_id,value"];
  PISTON_RINGS.forEach((row, i) => row.forEach((v) => lines.push(`${i + 1},${v.toFixed(3)}`)));
  return lines.join("\n");
}

function show(target, fn) {
  try {
    $(target).innerHTML = fn();
  } catch (e) {
    $(target).innerHTML = `<div class="err">${String(e)}</div>`;
  }
}

const f = (x, d = 5) => x.toFixed(d);

function runLimits() {
  show("lim-out", () => {
    const r = JSON.parse(limits($("data").value, $("lim-method").value, $("lim-pooling").value, num("lim-nk"), num("lim-g")));
    const l = r.limits;
    return `<table><tr><th>μ̂</th><th>σ̂</th><th>LCL</th><th>CL</th><th>UCL</th></tr>
      <tr><td>${f(r.mu_hat)}</td><td>${f(r.sigma_hat, 6)}</td><td>${f(l.lcl)}</td><td>${f(l.cl)}</td><td>${f(l.ucl)}</td></tr></table>
      ${r.svg}`;
  });
}

function runSweep() {
  show("sw-out", () => {
    const r = JSON.parse(sensitivity($("data").value, num("sw-sample"), num("sw-start"), num("sw-stop"),
      num("sw-step"), num("sw-replace"), $("sw-pooling").value, num("lim-nk")));
    const ranges = r.ucl_ranges.map(([m, w]) => `<tr><td>Method ${m}</td><td>${f(w, 6)}</td></tr>`).join("");
    return `<table><tr><th></th><th>UCL range</th></tr>${ranges}</table>${r.svg}`;
  });
}

function runRunLength() {
  $("rl-out").textContent = "running…";
  setTimeout(() => show("rl-out", () => {
    const r = JSON.parse(run_length(num("rl-plan"), $("rl-method").value, $("rl-pooling").value,
      num("rl-reps"), num("rl-seed"), 10));
    return `<table><tr><th>ARL</th><th>± SE</th><th>SDRL</th><th>P${r.percentile}RL</th><th>skewness</th><th>censored</th></tr>
      <tr><td>${f(r.arl, 1)}</td><td>${f(r.arl_std_error, 1)}</td><td>${f(r.sdrl, 1)}</td><td>${f(r.prl, 0)}</td>
      <td>${f(r.skewness, 2)}</td><td>${r.censored}</td></tr></table>`;
  }), 0);
}

await init();
$("data").value = csvText();
$("lim-run").onclick = runLimits;
$("sw-run").onclick = runSweep;
$("rl-run").onclick = runRunLength;
runLimits();
