import { Editor, hasEdge } from "./state.js";

const JOINT_COLORS = ["#7a5c2e", "#2b6cb0", "#c53030"]; // ground, simple, crank
const JOINT_RADIUS = 7;

function toPx(
  p: [number, number] | number[],
  w: number,
  h: number,
): [number, number] {
  // unit box -> canvas, y up
  return [p[0] * w, (1 - p[1]) * h];
}

/** Draw the whole editor frame: bars, joints, trace and status badges. */
export function renderFrame(
  ctx: CanvasRenderingContext2D,
  editor: Editor,
  w: number,
  h: number,
): void {
  ctx.clearRect(0, 0, w, h);
  const mech = editor.mechanism;
  const out = editor.outcome;

  // joint positions at the animation cursor, falling back to the edit pose
  const atCursor: [number, number][] = mech.positions.map((p, j) => {
    if (out?.kind === "trajectory") {
      const pt = out.positions[j][editor.cursor];
      return [pt[0], pt[1]];
    }
    return [p[0], p[1]];
  });

  ctx.lineWidth = 3;
  ctx.strokeStyle = "#4a5568";
  for (let i = 0; i < mech.n; i++) {
    for (let j = i + 1; j < mech.n; j++) {
      if (!hasEdge(mech, i, j)) continue;
      const [x1, y1] = toPx(atCursor[i], w, h);
      const [x2, y2] = toPx(atCursor[j], w, h);
      ctx.beginPath();
      ctx.moveTo(x1, y1);
      ctx.lineTo(x2, y2);
      ctx.stroke();
    }
  }

  // traced coupler curve up to the cursor
  if (out?.kind === "trajectory" && editor.tracedJoint !== null) {
    const track = out.positions[editor.tracedJoint];
    ctx.strokeStyle = "#38a169";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    for (let t = 0; t <= editor.cursor; t++) {
      const [x, y] = toPx(track[t], w, h);
      if (t === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();
  }

  const lockedJoint = out?.kind === "locking" ? out.locking.joint : -1;
  for (let j = 0; j < mech.n; j++) {
    const [x, y] = toPx(atCursor[j], w, h);
    ctx.beginPath();
    ctx.arc(x, y, JOINT_RADIUS, 0, 2 * Math.PI);
    ctx.fillStyle = j === lockedJoint ? "#e53e3e" : JOINT_COLORS[mech.types[j]];
    ctx.fill();
    if (editor.selection.includes(j)) {
      ctx.strokeStyle = "#d69e2e";
      ctx.lineWidth = 3;
      ctx.stroke();
    }
    ctx.fillStyle = "#1a202c";
    ctx.font = "11px sans-serif";
    ctx.fillText(String(j), x + JOINT_RADIUS + 2, y - 2);
  }

  // sketch overlay
  if (editor.sketch.length > 1) {
    ctx.strokeStyle = "#805ad5";
    ctx.setLineDash([4, 4]);
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    editor.sketch.forEach((p, idx) => {
      const [x, y] = toPx(p, w, h);
      if (idx === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.setLineDash([]);
  }

  if (out?.kind === "locking") {
    ctx.fillStyle = "#e53e3e";
    ctx.font = "bold 14px sans-serif";
    ctx.fillText(
      `LOCKING at step ${out.locking.step} (joint ${out.locking.joint})`,
      12,
      22,
    );
  }
  if (editor.lastError) {
    ctx.fillStyle = "#c05621";
    ctx.font = "12px sans-serif";
    ctx.fillText(editor.lastError, 12, h - 12);
  }
}
