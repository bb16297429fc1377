import { Api } from "./api.js";
import {
  JointType,
  MechanismRecord,
  RetrievalHit,
  SimOutcome,
} from "./types.js";

export const ARM_PIVOT: [number, number] = [0.5, 0.5];
export const ARM_LENGTH = 0.05;
export const DEBOUNCE_MS = 150;
export const SKETCH_POINTS = 64;

/** Index into the flat upper-triangle bit list for pair (i, j), i < j. */
export function pairIndex(n: number, i: number, j: number): number {
  if (i > j) [i, j] = [j, i];
  return i * n - (i * (i + 1)) / 2 + (j - i - 1);
}

export function hasEdge(mech: MechanismRecord, i: number, j: number): boolean {
  return mech.adjacency[pairIndex(mech.n, i, j)] === 1;
}

/** The default editor mechanism: a grounded crank plus one spare ground pin. */
export function seedMechanism(): MechanismRecord {
  return {
    n: 3,
    adjacency: [1, 0, 0],
    types: [0, 2, 0],
    positions: [[0.5, 0.5], [0.55, 0.5], [0.7, 0.5]],
  };
}

/**
 * Client-side mirror of the joint-addition operator: connect a new joint to
 * joints i and j.  Structural only — the service remains the kinematic
 * authority and re-derives everything on /simulate.
 */
export function addJoint(
  mech: MechanismRecord,
  i: number,
  j: number,
  position?: [number, number],
): MechanismRecord {
  if (i === j || i < 0 || j < 0 || i >= mech.n || j >= mech.n) {
    throw new Error(`bad joint pair (${i}, ${j})`);
  }
  if (mech.types[i] === 0 && mech.types[j] === 0) {
    throw new Error("cannot join two ground joints; add a ground pin instead");
  }
  const n = mech.n + 1;
  const adjacency: number[] = [];
  for (let a = 0; a < n; a++) {
    for (let b = a + 1; b < n; b++) {
      if (b < mech.n) {
        adjacency.push(mech.adjacency[pairIndex(mech.n, a, b)]);
      } else {
        adjacency.push(a === i || a === j ? 1 : 0);
      }
    }
  }
  const pos: [number, number] = position ?? [
    (mech.positions[i][0] + mech.positions[j][0]) / 2,
    (mech.positions[i][1] + mech.positions[j][1]) / 2,
  ];
  return {
    n,
    adjacency,
    types: [...mech.types, 1],
    positions: [...mech.positions, pos],
  };
}

/** Add an isolated ground pin. */
export function addGround(
  mech: MechanismRecord,
  position: [number, number] = [0.25, 0.25],
): MechanismRecord {
  const n = mech.n + 1;
  const adjacency: number[] = [];
  for (let a = 0; a < n; a++) {
    for (let b = a + 1; b < n; b++) {
      adjacency.push(b < mech.n ? mech.adjacency[pairIndex(mech.n, a, b)] : 0);
    }
  }
  return {
    n,
    adjacency,
    types: [...mech.types, 0],
    positions: [...mech.positions, position],
  };
}

/** Drop the most recently added joint (never the crank or its pivot). */
export function deleteLastJoint(mech: MechanismRecord): MechanismRecord {
  if (mech.n <= 3) return mech;
  const n = mech.n - 1;
  const adjacency: number[] = [];
  for (let a = 0; a < n; a++) {
    for (let b = a + 1; b < n; b++) {
      adjacency.push(mech.adjacency[pairIndex(mech.n, a, b)]);
    }
  }
  return {
    n,
    adjacency,
    types: mech.types.slice(0, n),
    positions: mech.positions.slice(0, n),
  };
}

export function moveJoint(
  mech: MechanismRecord,
  joint: number,
  to: [number, number],
): MechanismRecord {
  const clamp = (v: number) => Math.min(1, Math.max(0, v));
  let p: [number, number] = [clamp(to[0]), clamp(to[1])];
  if (joint === 0) return mech; // the actuator pivot is anchored
  if (joint === 1) {
    // the crank tip stays on its 0.05 circle around the pivot
    const ang = Math.atan2(p[1] - ARM_PIVOT[1], p[0] - ARM_PIVOT[0]);
    p = [
      ARM_PIVOT[0] + ARM_LENGTH * Math.cos(ang),
      ARM_PIVOT[1] + ARM_LENGTH * Math.sin(ang),
    ];
  }
  const positions = mech.positions.map(
    (q, idx) => (idx === joint ? p : q) as [number, number],
  );
  return { ...mech, positions };
}

/** Pre-flight checks mirrored from the service validator. */
export function structuralProblems(mech: MechanismRecord): string[] {
  const out: string[] = [];
  if (mech.n < 3) out.push("fewer than 3 joints");
  if (mech.types[0] !== 0) out.push("joint 0 must be a ground pin");
  if (mech.types[1] !== 2) out.push("joint 1 must be the crank tip");
  if (mech.adjacency[0] !== 1) out.push("crank edge (0,1) missing");
  const expected = (mech.n * (mech.n - 1)) / 2;
  if (mech.adjacency.length !== expected) out.push("adjacency length mismatch");
  if (mech.positions.length !== mech.n) out.push("positions length mismatch");
  return out;
}

/** Even-index subsampling of a drawn path down to `count` points. */
export function resamplePath(
  path: [number, number][],
  count: number,
): [number, number][] {
  if (path.length <= count) return path;
  const out: [number, number][] = [];
  for (let k = 0; k < count; k++) {
    const idx = Math.round((k * (path.length - 1)) / (count - 1));
    out.push(path[idx]);
  }
  return out;
}

export type Listener = () => void;

/**
 * Editor state machine.  All kinematics come from the service; the client
 * only mirrors structural edits for responsiveness.  Simulation requests are
 * debounced and latest-wins: a stale response never overwrites a newer one.
 */
export class Editor {
  mechanism: MechanismRecord = seedMechanism();
  selection: number[] = [];
  cursor = 0; // animation step in [0, T)
  outcome: SimOutcome | null = null;
  tracedJoint: number | null = null;
  sketch: [number, number][] = [];
  hits: RetrievalHit[] = [];
  lastError: string | null = null;

  private timer: ReturnType<typeof setTimeout> | null = null;
  private requestSerial = 0;
  private listeners: Listener[] = [];
  private pendingSim: Promise<void> = Promise.resolve();

  constructor(
    private api: Api,
    private debounceMs: number = DEBOUNCE_MS,
  ) {}

  onChange(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  /** The in-flight (or last) simulate request; tests await this. */
  settled(): Promise<void> {
    return this.pendingSim;
  }

  toggleSelect(joint: number): void {
    const at = this.selection.indexOf(joint);
    if (at >= 0) this.selection.splice(at, 1);
    else this.selection.push(joint);
    if (this.selection.length > 2) this.selection.shift();
    this.emit();
  }

  addJointFromSelection(position?: [number, number]): void {
    if (this.selection.length !== 2) {
      this.lastError = "select two joints first";
      this.emit();
      return;
    }
    const [i, j] = this.selection;
    try {
      this.mechanism = addJoint(this.mechanism, i, j, position);
      this.selection = [];
      this.lastError = null;
    } catch (err) {
      this.lastError = (err as Error).message;
    }
    this.scheduleSimulate();
  }

  addGroundPin(position?: [number, number]): void {
    this.mechanism = addGround(this.mechanism, position);
    this.lastError = null;
    this.scheduleSimulate();
  }

  dragJoint(joint: number, to: [number, number]): void {
    this.mechanism = moveJoint(this.mechanism, joint, to);
    this.scheduleSimulate();
  }

  deleteLast(): void {
    this.mechanism = deleteLastJoint(this.mechanism);
    this.selection = this.selection.filter((j) => j < this.mechanism.n);
    this.scheduleSimulate();
  }

  setTracedJoint(joint: number | null): void {
    this.tracedJoint = joint;
    this.emit();
  }

  advanceCursor(): void {
    if (this.outcome?.kind !== "trajectory") return;
    this.cursor = (this.cursor + 1) % this.outcome.T;
    this.emit();
  }

  /** Debounced; collapses a burst of edits into one /simulate call. */
  scheduleSimulate(T = 200): void {
    this.emit();
    if (this.timer) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.pendingSim = this.simulateNow(T);
    }, this.debounceMs);
  }

  async simulateNow(T = 200): Promise<void> {
    const problems = structuralProblems(this.mechanism);
    if (problems.length) {
      this.lastError = problems.join("; ");
      this.emit();
      return;
    }
    const serial = ++this.requestSerial;
    try {
      const outcome = await this.api.simulate(this.mechanism, T);
      if (serial !== this.requestSerial) return; // a newer request superseded us
      this.outcome = outcome;
      this.cursor = Math.min(
        this.cursor,
        outcome.kind === "locking" ? outcome.locking.step : outcome.T - 1,
      );
      this.lastError = null;
    } catch (err) {
      if (serial !== this.requestSerial) return;
      this.outcome = null;
      this.lastError = (err as Error).message;
    }
    this.emit();
  }

  beginSketch(): void {
    this.sketch = [];
    this.hits = [];
    this.emit();
  }

  extendSketch(point: [number, number]): void {
    this.sketch.push(point);
    this.emit();
  }

  async finishSketch(): Promise<void> {
    if (this.sketch.length < 3) return;
    const points = resamplePath(this.sketch, SKETCH_POINTS);
    try {
      this.hits = await this.api.retrieve(points);
      this.lastError = null;
    } catch (err) {
      this.hits = [];
      this.lastError = (err as Error).message;
    }
    this.emit();
  }

  loadHit(hit: RetrievalHit): void {
    this.loadRecord(hit.mechanism);
  }

  /** Serialize the current mechanism; load() round-trips it exactly. */
  save(): string {
    return JSON.stringify(this.mechanism);
  }

  loadRecord(record: MechanismRecord): void {
    this.mechanism = {
      n: record.n,
      adjacency: [...record.adjacency],
      types: [...record.types] as JointType[],
      positions: record.positions.map((p) => [p[0], p[1]] as [number, number]),
    };
    this.selection = [];
    this.cursor = 0;
    this.outcome = null;
    this.scheduleSimulate();
  }

  load(text: string): void {
    this.loadRecord(JSON.parse(text) as MechanismRecord);
  }
}
