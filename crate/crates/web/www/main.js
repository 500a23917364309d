import init, { table3, svm_boundary, cohort_ablation } from "./pkg/mindprobe_web.js";

const $ = (id) => document.getElementById(id);

function guard(target, f) {
  try {
    f();
  } catch (e) {
    target.textContent = String(e.message ?? e);
    target.className = "err";
  }
}

function renderTable3() {
  const t = Number($("t3-threshold").value);
  $("t3-threshold-v").textContent = t.toFixed(2);
  guard($("t3-report"), () => {
    const v = JSON.parse(table3(t));
    const flagged = new Set(v.flagged.map(([i, j]) => `${i},${j}`));
    let html = "<table class='matrix'><tr><th></th>";
    html += v.questions.map((q) => `<th>${q}</th>`).join("") + "</tr>";
    v.cells.forEach((row, i) => {
      html += `<tr><th>${v.questions[i]}</th>`;
      html += row.map((c, j) => `<td class="${flagged.has(`${i},${j}`) ? "flag" : ""}">${c}</td>`).join("");
      html += "</tr>";
    });
    $("t3-table").innerHTML = html + "</table>";
    $("t3-report").className = "";
    $("t3-report").textContent = v.text;
  });
}

function renderSvm() {
  const sigma = Number($("svm-sigma").value);
  const c = 10 ** Number($("svm-c").value);
  $("svm-sigma-v").textContent = sigma.toFixed(2);
  $("svm-c-v").textContent = c.toPrecision(3);
  guard($("svm-info"), () => {
    const v = JSON.parse(svm_boundary(sigma, c, 120, Number($("svm-seed").value)));
    const canvas = $("svm-canvas");
    const ctx = canvas.getContext("2d");
    const cell = canvas.width / v.grid;
    for (let r = 0; r < v.grid; r++) {
      for (let k = 0; k < v.grid; k++) {
        const d = v.decision[r * v.grid + k];
        const a = Math.min(Math.abs(d), 1.5) / 1.5;
        ctx.fillStyle = Math.abs(d) < 0.04 ? "#333"
          : d > 0 ? `rgba(41,128,185,${0.15 + 0.5 * a})` : `rgba(230,126,34,${0.15 + 0.5 * a})`;
        ctx.fillRect(k * cell, r * cell, cell + 1, cell + 1);
      }
    }
    const px = (x) => ((x + 3) / 6) * canvas.width;
    const py = (y) => ((3 - y) / 6) * canvas.height;
    const support = new Set(v.support);
    v.points.forEach(([x, y], i) => {
      ctx.beginPath();
      ctx.arc(px(x), py(y), 3.5, 0, 2 * Math.PI);
      ctx.fillStyle = v.labels[i] > 0 ? "#1f4e79" : "#a04000";
      ctx.fill();
      if (support.has(i)) {
        ctx.lineWidth = 1.5;
        ctx.strokeStyle = "#000";
        ctx.beginPath();
        ctx.arc(px(x), py(y), 6, 0, 2 * Math.PI);
        ctx.stroke();
      }
    });
    $("svm-info").className = "";
    $("svm-info").textContent =
      `training accuracy ${v.accuracy.toFixed(1)}%\nsupport vectors ${v.support.length} of ${v.points.length}\nsolver iterations ${v.iterations}`;
  });
}

function heat(ctx, v, size) {
  const n = v.questions.length;
  const pad = 28;
  const cell = (size - pad) / n;
  ctx.clearRect(0, 0, size, size);
  ctx.font = "11px system-ui";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  const flagged = new Set(v.flagged.map(([i, j]) => `${i},${j}`));
  for (let i = 0; i < n; i++) {
    ctx.fillStyle = "#222";
    ctx.fillText(v.questions[i], pad + (i + 0.5) * cell, pad / 2);
    ctx.fillText(v.questions[i], pad / 2, pad + (i + 0.5) * cell);
    for (let j = 0; j < n; j++) {
      const x = v.cells[i][j];
      const drop = Math.max(0, Math.min(1, (v.overall - x) / Math.max(v.overall, 1e-9) / 0.5));
      ctx.fillStyle = `hsl(${120 - 120 * drop}, 60%, ${88 - 35 * drop}%)`;
      ctx.fillRect(pad + j * cell, pad + i * cell, cell - 1, cell - 1);
      if (flagged.has(`${i},${j}`)) {
        ctx.strokeStyle = "#000";
        ctx.lineWidth = 2;
        ctx.strokeRect(pad + j * cell + 2, pad + i * cell + 2, cell - 5, cell - 5);
      }
      ctx.fillStyle = "#111";
      ctx.fillText(x.toFixed(0), pad + (j + 0.5) * cell, pad + (i + 0.5) * cell);
    }
  }
}

function runCohort() {
  $("co-report").textContent = "training...";
  setTimeout(() => guard($("co-report"), () => {
    const v = JSON.parse(cohort_ablation(
      Number($("co-n").value), Number($("co-seed").value),
      Number($("co-flip").value), Number($("co-copy").value), 0.25));
    heat($("co-canvas").getContext("2d"), v, $("co-canvas").width);
    $("co-report").className = "";
    $("co-report").textContent = v.text;
  }), 0);
}

await init();
$("t3-threshold").addEventListener("input", renderTable3);
for (const id of ["svm-sigma", "svm-c", "svm-seed"]) $(id).addEventListener("input", renderSvm);
$("co-run").addEventListener("click", runCohort);
renderTable3();
renderSvm();
runCohort();
