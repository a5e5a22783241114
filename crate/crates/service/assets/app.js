"use strict";

const $ = (id) => document.getElementById(id);
const state = { grid: null, vsup: null };

async function api(path, options) {
  const res = await fetch("/api" + path, options);
  const body = await res.json();
  if (!res.ok) throw new Error(body.error ? body.error.message : res.statusText);
  return body;
}

function fillSelect(el, values, label = (v) => v) {
  for (const v of values) {
    const opt = document.createElement("option");
    opt.value = v;
    opt.textContent = label(v);
    el.appendChild(opt);
  }
}

async function loadCores() {
  const q = new URLSearchParams();
  for (const key of ["location", "fate", "from", "to"]) {
    if ($(key).value) q.set(key, $(key).value);
  }
  const cores = await api("/cores?" + q);
  const body = $("cores").querySelector("tbody");
  body.replaceChildren();
  for (const c of cores) {
    const row = body.insertRow();
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = c.core_id;
    row.insertCell().appendChild(box);
    for (const v of [c.core_id, c.location_name, c.date, c.core_fate, c.position.lat, c.position.lon]) {
      row.insertCell().textContent = v;
    }
  }
}

function setStatus(text, isError = false) {
  $("status").textContent = text;
  $("status").className = isError ? "error" : "";
}

async function run() {
  const ids = [...document.querySelectorAll("#cores input:checked")].map((b) => b.value);
  const request = {
    method: $("method").value,
    parameter: $("parameter").value,
    cell_xy_cm: Number($("grid").value),
    core_ids: ids,
  };
  try {
    const { job_id } = await api("/interpolations", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    for (;;) {
      const job = await api("/interpolations/" + job_id);
      setStatus(job.status);
      if (job.status === "done") {
        state.grid = job.grid;
        state.vsup = job.vsup;
        $("slice").max = job.grid.spec.nz - 1;
        draw();
        return;
      }
      if (job.status === "failed") throw new Error(job.error.message);
      await new Promise((r) => setTimeout(r, 250));
    }
  } catch (e) {
    setStatus(e.message, true);
  }
}

// Greyscale ramp with lightness pulled towards mid-grey as suppression grows.
function color(layer, bin) {
  const n = 2 ** layer;
  const t = (bin + 0.5) / n;
  const s = state.vsup.layers > 1 ? layer / (state.vsup.layers - 1) : 1;
  const v = Math.round(255 * (0.5 + (t - 0.5) * s));
  return [v, v, v];
}

function draw() {
  const { spec } = state.grid;
  const iz = Number($("slice").value);
  const canvas = $("view");
  const ctx = canvas.getContext("2d");
  const cw = canvas.width / spec.nx;
  const ch = canvas.height / spec.ny;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let iy = 0; iy < spec.ny; iy++) {
    for (let ix = 0; ix < spec.nx; ix++) {
      const i = (iz * spec.ny + iy) * spec.nx + ix;
      if (state.vsup.layer[i] === null) continue;
      const [r, g, b] = color(state.vsup.layer[i], state.vsup.bin[i]);
      ctx.fillStyle = `rgb(${r},${g},${b})`;
      ctx.fillRect(ix * cw, canvas.height - (iy + 1) * ch, cw, ch);
    }
  }
}

async function init() {
  const ws = await api("/workspace");
  $("summary").textContent = `${ws.core_count} cores, ${ws.horizon_count} horizons`;
  fillSelect($("location"), Object.keys(ws.locations));
  fillSelect($("fate"), Object.keys(ws.fates));
  fillSelect($("parameter"), ws.parameters);
  fillSelect($("grid"), Array.from({ length: 20 }, (_, k) => 7 * (k + 1)), (v) => v + " cm");
  $("grid").value = "77";
  for (const key of ["location", "fate", "from", "to"]) $(key).addEventListener("change", loadCores);
  $("run").addEventListener("click", run);
  $("slice").addEventListener("input", () => state.grid && draw());
  await loadCores();
}

init().catch((e) => setStatus(e.message, true));
