import { Api } from "./api.js";
import { renderFrame } from "./render.js";
import { Editor } from "./state.js";

const canvas = document.getElementById("stage") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const api = new Api("");
const editor = new Editor(api);

type Mode = "edit" | "sketch";
let mode: Mode = "edit";
let dragging: number | null = null;
let animating = true;

function canvasPoint(ev: PointerEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  return [
    (ev.clientX - rect.left) / rect.width,
    1 - (ev.clientY - rect.top) / rect.height,
  ];
}

function nearestJoint(p: [number, number]): number | null {
  let best: number | null = null;
  let bestD = 0.03; // pick radius in unit-box units
  editor.mechanism.positions.forEach((q, j) => {
    const d = Math.hypot(q[0] - p[0], q[1] - p[1]);
    if (d < bestD) {
      best = j;
      bestD = d;
    }
  });
  return best;
}

canvas.addEventListener("pointerdown", (ev) => {
  const p = canvasPoint(ev);
  if (mode === "sketch") {
    editor.beginSketch();
    editor.extendSketch(p);
    return;
  }
  const j = nearestJoint(p);
  if (j === null) return;
  if (ev.shiftKey) {
    editor.toggleSelect(j);
  } else {
    dragging = j;
    canvas.setPointerCapture(ev.pointerId);
  }
});

canvas.addEventListener("pointermove", (ev) => {
  const p = canvasPoint(ev);
  if (mode === "sketch" && ev.buttons) {
    editor.extendSketch(p);
  } else if (dragging !== null) {
    editor.dragJoint(dragging, p);
  }
});

canvas.addEventListener("pointerup", async () => {
  if (mode === "sketch") {
    await editor.finishSketch();
    renderHits();
  }
  dragging = null;
});

function button(id: string, fn: () => void): void {
  document.getElementById(id)!.addEventListener("click", fn);
}

button("add-joint", () => editor.addJointFromSelection());
button("add-ground", () => editor.addGroundPin());
button("delete-last", () => editor.deleteLast());
button("toggle-sketch", () => {
  mode = mode === "edit" ? "sketch" : "edit";
  document.getElementById("toggle-sketch")!.textContent =
    mode === "sketch" ? "Back to editing" : "Sketch a target path";
});
button("save", () => {
  const blob = new Blob([editor.save()], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "mechanism.json";
  a.click();
});
button("random", async () => {
  const mech = await api.randomMechanism(8, Math.floor(Math.random() * 1e6));
  editor.loadRecord(mech);
});

const fileInput = document.getElementById("load") as HTMLInputElement;
fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (file) editor.load(await file.text());
});

const hitsPanel = document.getElementById("hits")!;
function renderHits(): void {
  hitsPanel.innerHTML = "";
  for (const hit of editor.hits) {
    const row = document.createElement("button");
    row.className = "hit" + (hit.above_threshold ? " far" : "");
    row.textContent =
      `mech ${hit.mech_id} / joint ${hit.joint_id} — d=${hit.distance.toFixed(4)}` +
      (hit.above_threshold ? " (above threshold)" : "");
    row.addEventListener("click", () => editor.loadHit(hit));
    hitsPanel.appendChild(row);
  }
}

editor.onChange(() => renderFrame(ctx, editor, canvas.width, canvas.height));

function tick(): void {
  if (animating) editor.advanceCursor();
  renderFrame(ctx, editor, canvas.width, canvas.height);
  requestAnimationFrame(tick);
}

button("play-pause", () => {
  animating = !animating;
});

editor.setTracedJoint(null);
editor.scheduleSimulate();
tick();
