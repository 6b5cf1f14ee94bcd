import init, { fit_rotated_cloud, cosine_histograms, Drive } from "./pkg/saps_web.js";

const $ = (id) => document.getElementById(id);

function drawCloud() {
  const out = JSON.parse(fit_rotated_cloud(300, +$("angle").value, 1.5, +$("noise").value, $("kind").value, 1n));
  const ctx = $("cloud").getContext("2d");
  const { width: w, height: h } = ctx.canvas;
  ctx.clearRect(0, 0, w, h);
  const sets = [["source", "#999"], ["target", "#1565c0"], ["aligned", "#e65100"]];
  for (const [name, colour] of sets) {
    ctx.fillStyle = colour;
    for (const [x, y] of out[name]) {
      ctx.fillRect(w / 2 + x * 45 - 1.5, h / 2 - y * 45 - 1.5, 3, 3);
    }
  }
  $("fit").textContent =
    `grey: source\nblue: target\norange: mapped source\n\n` +
    `residual       ${out.residual.toExponential(3)}\n` +
    `no map         ${out.naive_residual.toFixed(3)}\n` +
    `fitted angle   ${out.fitted_angle.toFixed(2)}`;
}

let drive;

function drawDrive() {
  for (const visual of ["green", "red", "blue"]) {
    const obs = drive.observation(visual);
    const ctx = $(`v-${visual}`).getContext("2d");
    const cell = ctx.canvas.width / 5;
    // Newest frame only; row 0 is the agent's row, drawn at the bottom.
    for (let ahead = 0; ahead < 5; ahead++) {
      for (let lane = 0; lane < 5; lane++) {
        const i = (ahead * 5 + lane) * 3;
        const [r, g, b] = [obs[i], obs[i + 1], obs[i + 2]].map((v) => Math.round(v * 255));
        ctx.fillStyle = `rgb(${r},${g},${b})`;
        ctx.fillRect(lane * cell, (4 - ahead) * cell, cell, cell);
      }
    }
  }
  $("drive").textContent = `speed ${drive.speed()}  return ${drive.total()}${drive.done() ? "  (done)" : ""}`;
}

function resetDrive() {
  drive = new Drive(BigInt($("track").value || 0));
  drawDrive();
}

function drawHist() {
  const bins = 20;
  const out = JSON.parse(cosine_histograms(400, +$("dim").value, +$("cnoise").value, bins, 2n));
  const ctx = $("hist").getContext("2d");
  const { width: w, height: h } = ctx.canvas;
  ctx.clearRect(0, 0, w, h);
  const max = Math.max(...out.aligned, ...out.naive, 1);
  const bw = w / bins;
  for (let k = 0; k < bins; k++) {
    ctx.fillStyle = "rgba(120,120,120,0.6)";
    const hn = (out.naive[k] / max) * (h - 20);
    ctx.fillRect(k * bw + 2, h - hn, bw / 2 - 2, hn);
    ctx.fillStyle = "rgba(230,81,0,0.8)";
    const ha = (out.aligned[k] / max) * (h - 20);
    ctx.fillRect(k * bw + bw / 2, h - ha, bw / 2 - 2, ha);
  }
  ctx.fillStyle = "#222";
  ctx.fillText("-1", 2, 12);
  ctx.fillText("1", w - 10, 12);
}

await init();
for (const id of ["angle", "noise", "kind"]) $(id).addEventListener("input", drawCloud);
for (const id of ["dim", "cnoise"]) $(id).addEventListener("input", drawHist);
$("track").addEventListener("change", resetDrive);
for (const b of document.querySelectorAll("button[data-a]")) {
  b.addEventListener("click", () => {
    drive.step(+b.dataset.a);
    drawDrive();
  });
}
drawCloud();
resetDrive();
drawHist();
