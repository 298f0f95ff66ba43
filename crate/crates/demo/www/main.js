// Built by `wasm-pack build crates/demo --target web --out-dir www/pkg`.
import init, { Demo } from "./pkg/ssky_demo.js";

const canvas = document.getElementById("view");
const g = canvas.getContext("2d");
const statusEl = document.getElementById("status");
const $ = (id) => document.getElementById(id);

let demo = null;
let points = new Float64Array();
let edges = new Float64Array();
let queries = [];
let result = null;
let picked = [];
let overlay = null; // { bisector } or { box }

const sx = (x) => x * canvas.width;
const sy = (y) => (1 - y) * canvas.height;

function say(text, error = false) {
  statusEl.textContent = text;
  statusEl.className = error ? "err" : "";
}

function dot(x, y, r, color) {
  g.fillStyle = color;
  g.beginPath();
  g.arc(sx(x), sy(y), r, 0, 2 * Math.PI);
  g.fill();
}

function draw() {
  g.clearRect(0, 0, canvas.width, canvas.height);
  if ($("edges").checked) {
    g.strokeStyle = "#ddd";
    g.beginPath();
    for (let i = 0; i < edges.length; i += 4) {
      g.moveTo(sx(edges[i]), sy(edges[i + 1]));
      g.lineTo(sx(edges[i + 2]), sy(edges[i + 3]));
    }
    g.stroke();
  }
  for (let i = 0; i < points.length; i += 2) dot(points[i], points[i + 1], 1.5, "#888");

  if (result) {
    const hull = result.hull;
    g.strokeStyle = "#d22";
    g.fillStyle = "rgba(220, 30, 30, 0.08)";
    g.beginPath();
    for (let i = 0; i < hull.length; i += 2) g.lineTo(sx(hull[i]), sy(hull[i + 1]));
    g.closePath();
    g.fill();
    g.stroke();
    const seeds = new Set(result.seeds);
    for (const id of result.skyline) {
      dot(points[2 * id], points[2 * id + 1], 3.5, seeds.has(id) ? "#f90" : "#06c");
    }
  }
  for (const [x, y] of queries) dot(x, y, 4, "#d22");

  for (const id of picked) {
    g.strokeStyle = "#000";
    g.beginPath();
    g.arc(sx(points[2 * id]), sy(points[2 * id + 1]), 6, 0, 2 * Math.PI);
    g.stroke();
  }
  if (overlay?.bisector?.length === 4) {
    const b = overlay.bisector;
    g.strokeStyle = "#393";
    g.beginPath();
    g.moveTo(sx(b[0]), sy(b[1]));
    g.lineTo(sx(b[2]), sy(b[3]));
    g.stroke();
  }
  if (overlay?.box) {
    const [x0, y0, x1, y1] = overlay.box;
    g.strokeStyle = "#393";
    g.strokeRect(sx(x0), sy(y1), sx(x1) - sx(x0), sy(y0) - sy(y1));
  }
}

function flatQueries() {
  return new Float64Array(queries.flat());
}

function regenerate() {
  try {
    demo?.free();
    demo = new Demo(Number($("n").value), Number($("seed").value));
    points = demo.points();
    edges = demo.cell_edges();
    result = null;
    picked = [];
    overlay = null;
    say(`${demo.len()} points. Click to place query points.`);
  } catch (e) {
    say(String(e), true);
  }
  draw();
}

function runSkyline() {
  if (!demo) return;
  try {
    result?.free();
    result = demo.run(flatQueries(), $("algo").value);
    say(
      `${$("algo").value}: ${result.skyline.length} skyline points, ${result.seeds.length} seeds\n` +
        `dominance tests ${result.dominance_tests}\n` +
        `cell reads ${result.cell_reads}, index node reads ${result.index_node_reads}\n` +
        `time ${result.time_ms.toFixed(2)} ms`,
    );
  } catch (e) {
    result = null;
    say(String(e), true);
  }
  draw();
}

function compare(i, j) {
  try {
    const r = demo.dominance(i, j, flatQueries());
    const verdict = r.verdict === 1 ? `${i} dominates ${j}` : r.verdict === -1 ? `${j} dominates ${i}` : "neither dominates";
    overlay = { bisector: r.bisector };
    say(`${verdict}\nbisector ${r.crosses_hull ? "crosses" : "misses"} the query hull interior`);
    r.free();
  } catch (e) {
    say(String(e), true);
  }
}

canvas.addEventListener("click", (ev) => {
  if (!demo) return;
  const rect = canvas.getBoundingClientRect();
  const x = (ev.clientX - rect.left) / rect.width;
  const y = 1 - (ev.clientY - rect.top) / rect.height;
  const mode = document.querySelector("input[name=mode]:checked").value;
  if (mode === "query") {
    queries.push([x, y]);
    runSkyline();
    return;
  }
  if (queries.length === 0) {
    say("place query points first", true);
    return;
  }
  const id = demo.nearest(x, y);
  if (id === undefined) return;
  if (mode === "pair") {
    picked = picked.length === 1 && picked[0] !== id ? [picked[0], id] : [id];
    overlay = null;
    if (picked.length === 2) compare(picked[0], picked[1]);
    else say(`picked ${id}; pick another point`);
  } else {
    picked = [id];
    try {
      overlay = { box: demo.dominating_box(id, flatQueries()) };
      say(`every point outside the box is dominated by ${id}`);
    } catch (e) {
      say(String(e), true);
    }
  }
  draw();
});

$("regen").addEventListener("click", () => {
  regenerate();
  if (queries.length) runSkyline();
});
$("run").addEventListener("click", runSkyline);
$("edges").addEventListener("change", draw);
$("clear").addEventListener("click", () => {
  queries = [];
  result?.free();
  result = null;
  picked = [];
  overlay = null;
  say("queries cleared");
  draw();
});

await init();
regenerate();
