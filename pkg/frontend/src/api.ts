import {
  ErrorEnvelope,
  MechanismRecord,
  RetrievalHit,
  ServiceError,
  SimOutcome,
} from "./types.js";

/** Thin typed client for the mechanism service. */
export class Api {
  constructor(private base: string = "") {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = await res.json();
    if (!res.ok) {
      const env = payload as ErrorEnvelope;
      throw new ServiceError(
        env.error?.code ?? "unknown",
        env.error?.message ?? res.statusText,
        res.status,
      );
    }
    return payload as T;
  }

  async health(): Promise<{ status: string; atlas_size: number }> {
    const res = await fetch(this.base + "/health");
    return res.json();
  }

  async simulate(mechanism: MechanismRecord, T = 200): Promise<SimOutcome> {
    const body = await this.post<{
      T: number;
      trajectory?: number[][][];
      locking?: { step: number; joint: number };
    }>("/simulate", { mechanism, T });
    if (body.locking) {
      return { kind: "locking", T: body.T, locking: body.locking };
    }
    return { kind: "trajectory", T: body.T, positions: body.trajectory! };
  }

  async applyOperator(
    mechanism: MechanismRecord,
    op: "ns" | "ng",
    i?: number,
    j?: number,
    position?: [number, number],
  ): Promise<MechanismRecord> {
    const body = await this.post<{ mechanism: MechanismRecord }>(
      "/operator/apply",
      { mechanism, op, i, j, position },
    );
    return body.mechanism;
  }

  async randomMechanism(n: number, seed = 0): Promise<MechanismRecord> {
    const body = await this.post<{ mechanism: MechanismRecord }>(
      "/mechanism/random",
      { n, seed },
    );
    return body.mechanism;
  }

  async retrieve(
    points: [number, number][],
    k = 3,
    threshold = 0.03,
  ): Promise<RetrievalHit[]> {
    const body = await this.post<{ hits: RetrievalHit[] }>("/retrieve", {
      points,
      k,
      threshold,
    });
    return body.hits;
  }
}
