// Wire types shared with the linkatlas HTTP service.

/** 0 = fixed (ground pin), 1 = simple, 2 = actuated crank tip. */
export type JointType = 0 | 1 | 2;

export interface MechanismRecord {
  n: number;
  /** Upper-triangle adjacency bits, row-major over pairs (i, j) with i < j. */
  adjacency: number[];
  types: JointType[];
  positions: [number, number][];
}

export interface LockingOutcome {
  step: number;
  joint: number;
}

export type SimOutcome =
  | { kind: "trajectory"; T: number; positions: number[][][] }
  | { kind: "locking"; T: number; locking: LockingOutcome };

export interface RetrievalHit {
  mech_id: number;
  joint_id: number;
  distance: number;
  above_threshold: boolean;
  curve: [number, number][];
  mechanism: MechanismRecord & { id: number };
}

export interface ErrorEnvelope {
  error: { code: string; message: string };
}

export class ServiceError extends Error {
  constructor(public code: string, message: string, public status: number) {
    super(message);
  }
}
