/**
 * Single-page viewer wiring: study browser, synchronized multi-planar
 * viewports with crosshair linking, diagnose panel, results and history
 * tables, CSV export, theme toggle, collapsible log panel.
 *
 * All numbers shown come verbatim from service responses; this file only
 * moves them into the DOM.
 */

import {
  ApiError,
  DiagnosticRecord,
  PhydcmClient,
  Plane,
  StudyEntry,
  recordRow,
} from "./api.js";
import { decodeBase64, grayToRgba } from "./render.js";
import { PLANES, ViewerController } from "./state.js";
import { getTheme, setTheme, toggleTheme } from "./theme.js";

const client = new PhydcmClient("");
const controller = new ViewerController();

let studies: StudyEntry[] = [];
let currentStudy: StudyEntry | null = null;
let classes: string[] = [];
let diagnosePending = false;
let logTimer: number | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(message: string, isError = false): void {
  const status = el<HTMLParagraphElement>("status");
  status.textContent = message;
  status.classList.toggle("error", isError);
}

// --- viewports ---------------------------------------------------------------

function canvasOf(plane: Plane): HTMLCanvasElement {
  return el<HTMLCanvasElement>(`canvas-${plane}`);
}

function sliderOf(plane: Plane): HTMLInputElement {
  return el<HTMLInputElement>(`slider-${plane}`);
}

async function loadSlice(plane: Plane): Promise<void> {
  if (!currentStudy) return;
  const generation = controller.generationOf(plane);
  const vp = controller.viewports[plane];
  try {
    const payload = await client.slice(
      currentStudy.study_id,
      plane,
      vp.index,
      controller.window ?? undefined,
      controller.level ?? undefined,
    );
    if (!controller.isCurrent(plane, generation)) return; // stale response
    drawSlice(plane, payload.width, payload.height, decodeBase64(payload.pixels));
    el<HTMLSpanElement>(`index-${plane}`).textContent =
      `${vp.index + 1}/${controller.planeExtent(plane)}`;
    sliderOf(plane).value = String(vp.index);
    if (plane === controller.activePlane) drawTargetPane(payload.width, payload.height);
  } catch (err) {
    reportError(err);
  }
}

function drawSlice(plane: Plane, width: number, height: number, gray: Uint8Array): void {
  const canvas = canvasOf(plane);
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.putImageData(new ImageData(grayToRgba(gray, width, height), width, height), 0, 0);
  const crosshair = controller.viewports[plane].crosshair;
  if (crosshair) {
    ctx.strokeStyle = "rgba(109, 213, 250, 0.9)";
    ctx.lineWidth = Math.max(1, width / 256);
    ctx.beginPath();
    ctx.moveTo(crosshair.col + 0.5, 0);
    ctx.lineTo(crosshair.col + 0.5, height);
    ctx.moveTo(0, crosshair.row + 0.5);
    ctx.lineTo(width, crosshair.row + 0.5);
    ctx.stroke();
  }
}

function drawTargetPane(width: number, height: number): void {
  // fourth pane mirrors the slice currently targeted for diagnosis
  const source = canvasOf(controller.activePlane);
  const target = el<HTMLCanvasElement>("canvas-target");
  target.width = width;
  target.height = height;
  target.getContext("2d")?.drawImage(source, 0, 0);
  el<HTMLSpanElement>("target-label").textContent =
    `${controller.activePlane} ${controller.viewports[controller.activePlane].index}`;
}

async function refreshAllSlices(): Promise<void> {
  await Promise.all(PLANES.map((plane) => loadSlice(plane)));
}

function setActivePane(plane: Plane): void {
  controller.setActive(plane);
  for (const p of PLANES) {
    el<HTMLDivElement>(`pane-${p}`).classList.toggle("active", p === plane);
  }
  void loadSlice(plane);
}

async function onCanvasClick(plane: Plane, event: MouseEvent): Promise<void> {
  if (!currentStudy) return;
  setActivePane(plane);
  const canvas = canvasOf(plane);
  const rect = canvas.getBoundingClientRect();
  const col = Math.floor(((event.clientX - rect.left) / rect.width) * canvas.width);
  const row = Math.floor(((event.clientY - rect.top) / rect.height) * canvas.height);
  if (col < 0 || row < 0 || col >= canvas.width || row >= canvas.height) return;
  const point = controller.pointFromClick(plane, row, col);
  if (!controller.inBounds(point)) return; // clicks outside the volume are a no-op
  try {
    const triples = await client.crosshair(currentStudy.study_id, point.x, point.y, point.z);
    controller.applyCrosshair(triples);
    await refreshAllSlices();
  } catch (err) {
    reportError(err);
  }
}

// --- study browser -------------------------------------------------------------

async function selectStudy(studyId: string): Promise<void> {
  currentStudy = studies.find((s) => s.study_id === studyId) ?? null;
  if (!currentStudy) return;
  controller.setStudy(currentStudy.dims);
  for (const plane of PLANES) {
    const slider = sliderOf(plane);
    slider.max = String(controller.planeExtent(plane) - 1);
    slider.value = String(controller.viewports[plane].index);
  }
  const hint = currentStudy.scan_type_hint;
  if (hint) {
    const scanSelect = el<HTMLSelectElement>("scan-type");
    for (const option of Array.from(scanSelect.options)) {
      if (option.value === hint || (hint === "mr" && option.value === "mri")) {
        scanSelect.value = option.value;
      }
    }
  }
  setStatus(`study ${currentStudy.study_id}: ${currentStudy.dims.join("x")}`);
  await refreshAllSlices();
}

// --- diagnosis -------------------------------------------------------------------

function renderResultRow(record: DiagnosticRecord): void {
  const table = el<HTMLTableElement>("results-table");
  const head = table.tHead?.rows[0];
  if (head && head.cells.length === 2 && classes.length) {
    for (const c of classes) {
      const cell = document.createElement("th");
      cell.textContent = `p(${c})`;
      head.appendChild(cell);
    }
  }
  const body = table.tBodies[0];
  const row = body.insertRow(0);
  for (const cell of recordRow(record, classes)) {
    row.insertCell().textContent = cell;
  }
}

async function runDiagnosis(): Promise<void> {
  if (diagnosePending || !currentStudy) return;
  diagnosePending = true;
  const button = el<HTMLButtonElement>("diagnose-btn");
  button.disabled = true;
  setStatus("diagnosing…");
  try {
    const record = await client.diagnose({
      study_id: currentStudy.study_id,
      plane: controller.activePlane,
      index: controller.viewports[controller.activePlane].index,
      scan_type: el<HTMLSelectElement>("scan-type").value,
      patient_id: el<HTMLInputElement>("patient-id").value || undefined,
      patient_name: el<HTMLInputElement>("patient-name").value || undefined,
    });
    renderResultRow(record);
    setStatus(`${record.predicted_class} (confidence ${record.confidence.toFixed(2)})`);
    await refreshHistory();
  } catch (err) {
    reportError(err);
  } finally {
    diagnosePending = false;
    button.disabled = false;
  }
}

// --- history ---------------------------------------------------------------------

async function refreshHistory(): Promise<void> {
  const records = await client.history();
  const body = el<HTMLTableElement>("history-table").tBodies[0];
  body.replaceChildren();
  for (const record of records.slice().reverse()) {
    const row = body.insertRow();
    row.insertCell().textContent = record.timestamp;
    row.insertCell().textContent = record.patient_name ?? "";
    row.insertCell().textContent = record.scan_type;
    row.insertCell().textContent = record.predicted_class;
    row.insertCell().textContent = record.confidence.toFixed(2);
  }
}

async function exportCsv(): Promise<void> {
  try {
    const text = await client.exportCsv();
    const url = URL.createObjectURL(new Blob([text], { type: "text/csv" }));
    const anchor = document.createElement("a");
    anchor.href = url;
    anchor.download = "phydcm_history.csv";
    anchor.click();
    URL.revokeObjectURL(url);
  } catch (err) {
    reportError(err);
  }
}

async function clearHistory(): Promise<void> {
  if (!window.confirm("Clear the entire diagnosis history?")) return;
  await client.clearHistory();
  await refreshHistory();
  el<HTMLTableElement>("results-table").tBodies[0].replaceChildren();
}

// --- log panel --------------------------------------------------------------------

function toggleLogPanel(): void {
  const panel = el<HTMLElement>("log-panel");
  const open = panel.classList.toggle("open");
  if (open && logTimer === null) {
    const poll = async () => {
      try {
        el<HTMLPreElement>("log-text").textContent = await client.log();
      } catch {
        /* service unreachable; keep the last contents */
      }
    };
    void poll();
    logTimer = window.setInterval(poll, 2000);
  } else if (!open && logTimer !== null) {
    window.clearInterval(logTimer);
    logTimer = null;
  }
}

// --- errors -----------------------------------------------------------------------

function reportError(err: unknown): void {
  if (err instanceof ApiError) {
    setStatus(`${err.code}: ${err.message}`, true);
  } else {
    setStatus(String(err), true);
  }
}

// --- boot -------------------------------------------------------------------------

async function boot(): Promise<void> {
  setTheme(getTheme());
  el<HTMLButtonElement>("theme-toggle").addEventListener("click", () => toggleTheme());
  el<HTMLButtonElement>("log-toggle").addEventListener("click", toggleLogPanel);
  el<HTMLButtonElement>("diagnose-btn").addEventListener("click", () => void runDiagnosis());
  el<HTMLButtonElement>("export-btn").addEventListener("click", () => void exportCsv());
  el<HTMLButtonElement>("clear-btn").addEventListener("click", () => void clearHistory());

  for (const plane of PLANES) {
    canvasOf(plane).addEventListener("click", (e) => void onCanvasClick(plane, e));
    el<HTMLDivElement>(`pane-${plane}`).addEventListener("click", () => setActivePane(plane));
    sliderOf(plane).addEventListener("input", (e) => {
      controller.setIndex(plane, Number((e.target as HTMLInputElement).value));
      void loadSlice(plane);
    });
  }
  document.addEventListener("keydown", (e) => {
    if (e.key === "ArrowUp" || e.key === "ArrowRight") {
      controller.stepIndex(1);
      void loadSlice(controller.activePlane);
    } else if (e.key === "ArrowDown" || e.key === "ArrowLeft") {
      controller.stepIndex(-1);
      void loadSlice(controller.activePlane);
    }
  });

  try {
    const models = await client.models();
    const scanSelect = el<HTMLSelectElement>("scan-type");
    scanSelect.replaceChildren();
    for (const model of models) {
      const option = document.createElement("option");
      option.value = model.scan_type;
      option.textContent = model.scan_type;
      scanSelect.appendChild(option);
    }
    classes = models[0]?.classes ?? [];

    studies = await client.studies();
    const studySelect = el<HTMLSelectElement>("study-select");
    studySelect.replaceChildren();
    if (studies.length === 0) {
      setStatus("no studies found under the service data directory");
    }
    for (const study of studies) {
      const option = document.createElement("option");
      option.value = study.study_id;
      option.textContent = `${study.study_id} (${study.dims.join("x")})`;
      studySelect.appendChild(option);
    }
    studySelect.addEventListener("change", () => void selectStudy(studySelect.value));
    if (studies.length > 0) await selectStudy(studies[0].study_id);

    await refreshHistory();
    setActivePane("axial");
  } catch (err) {
    reportError(err);
  }
}

document.addEventListener("DOMContentLoaded", () => void boot());
