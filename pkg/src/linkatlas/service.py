"""HTTP JSON service for interactive mechanism design.

Stateless between requests: every handler takes the full mechanism in the
body.  The atlas (if configured) is loaded once at startup and only read.
Locking during simulation is a domain outcome and comes back with status
200; validation failures and malformed bodies are 4xx inside the
``{"error": {"code", "message"}}`` envelope.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from linkatlas.atlas import DEFAULT_K, DEFAULT_THRESHOLD, Atlas
from linkatlas.curves import normalize
from linkatlas.generator import GenerationConfig, sample_positions, sample_topology
from linkatlas.mechanism import JointType, Mechanism, apply_Ng, apply_Ns, validate
from linkatlas.records import mechanism_to_record, record_to_mechanism
from linkatlas.solver import (
    Locking,
    PlanError,
    check_feasible,
    compile_plan,
    simulate_batch,
)

MIN_T = 8
MAX_T = 2000


class MechanismBody(BaseModel):
    n: int
    adjacency: list[int]
    types: list[int]
    positions: list[list[float]]


class SimulateRequest(BaseModel):
    mechanism: MechanismBody
    T: int = Field(default=200, ge=MIN_T, le=MAX_T)


class OperatorRequest(BaseModel):
    mechanism: MechanismBody
    op: str = "ns"  # "ns" joins two existing joints, "ng" drops a fixed joint
    i: int | None = None
    j: int | None = None
    position: list[float] | None = None


class RandomRequest(BaseModel):
    n: int = Field(default=8, ge=3, le=30)
    seed: int = 0


class RetrieveRequest(BaseModel):
    points: list[list[float]]
    k: int = Field(default=DEFAULT_K, ge=1, le=20)
    threshold: float = Field(default=DEFAULT_THRESHOLD, gt=0.0)


class ServiceError(Exception):
    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


def _envelope(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


def _parse_mechanism(body: MechanismBody) -> Mechanism:
    class _Rec:
        pass

    rec = _Rec()
    rec.id = 0
    rec.n = body.n
    rec.adjacency = body.adjacency
    rec.types = body.types
    rec.positions = body.positions
    try:
        mech = record_to_mechanism(rec)
    except Exception as exc:
        raise ServiceError("invalid_mechanism", str(exc)) from exc
    return mech


def _check_valid(mech: Mechanism) -> None:
    problems = validate(mech)
    if problems:
        raise ServiceError("invalid_mechanism", "; ".join(problems))


def _mech_payload(mech: Mechanism, mech_id: int = 0) -> dict:
    return vars(mechanism_to_record(mech, mech_id))


def create_app(atlas_path=None, ui_dir=None) -> FastAPI:
    app = FastAPI(title="linkatlas", docs_url=None, redoc_url=None)
    atlas = Atlas.load(atlas_path) if atlas_path else None

    @app.exception_handler(ServiceError)
    async def _service_error(request: Request, exc: ServiceError):
        return _envelope(exc.code, exc.message, exc.status)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return _envelope("bad_request", str(exc.errors()), 422)

    @app.exception_handler(Exception)
    async def _unhandled(request: Request, exc: Exception):
        return _envelope("internal", str(exc), 500)

    @app.get("/health")
    async def health():
        return {"status": "ok", "atlas_size": len(atlas) if atlas else 0}

    @app.post("/simulate")
    async def simulate(req: SimulateRequest):
        mech = _parse_mechanism(req.mechanism)
        _check_valid(mech)
        try:
            plan = compile_plan(mech)
        except PlanError as exc:
            raise ServiceError("not_solvable", str(exc)) from exc
        result = simulate_batch(mech.positions0[None], plan, req.T)[0]
        if isinstance(result, Locking):
            return {"locking": {"step": result.step, "joint": result.joint}, "T": req.T}
        return {"trajectory": result.positions.tolist(), "T": req.T}

    @app.post("/operator/apply")
    async def operator_apply(req: OperatorRequest):
        mech = _parse_mechanism(req.mechanism)
        if req.op == "ng":
            if req.position is not None:
                pos = np.asarray(req.position, dtype=float)
            else:
                pos = np.array([0.25, 0.25])
            out = apply_Ng(mech, pos)
        elif req.op == "ns":
            if req.i is None or req.j is None:
                raise ServiceError("bad_request", "ns requires joint indices i and j")
            if not (0 <= req.i < mech.n and 0 <= req.j < mech.n) or req.i == req.j:
                raise ServiceError("bad_request", "joint indices out of range")
            if (mech.types[req.i] == JointType.FIXED
                    and mech.types[req.j] == JointType.FIXED):
                raise ServiceError("invalid_operator",
                                   "cannot join two fixed joints")
            if req.position is not None:
                pos = np.asarray(req.position, dtype=float)
                if pos.shape != (2,):
                    raise ServiceError("bad_request", "position must be [x, y]")
            else:
                # Default placement keeps the result simulatable right away.
                pos = 0.5 * (mech.positions0[req.i] + mech.positions0[req.j])
            out = apply_Ns(mech, req.i, req.j, pos)
        else:
            raise ServiceError("bad_request", f"unknown operator {req.op!r}")
        return {"mechanism": _mech_payload(out)}

    @app.post("/mechanism/random")
    async def mechanism_random(req: RandomRequest):
        cfg = GenerationConfig(count=1, seed=req.seed)
        rng_topo = np.random.default_rng([req.seed, 9_000_000 + req.n, 0])
        rng_pos = np.random.default_rng([req.seed, 9_000_000 + req.n, 1])
        for _ in range(50):
            try:
                topology, plan = sample_topology(
                    rng_topo, req.n, cfg.ng_probability, cfg.topology_retries)
            except Exception as exc:
                raise ServiceError("generation_failed", str(exc), status=500) from exc
            for _ in range(cfg.max_attempts):
                mech = topology.with_positions(sample_positions(topology, rng_pos))
                if check_feasible(mech, plan, cfg.T_low, cfg.T_high):
                    _check_valid(mech)
                    return {"mechanism": _mech_payload(mech)}
        raise ServiceError("generation_failed",
                           f"no feasible mechanism with n={req.n}", status=500)

    @app.post("/retrieve")
    async def retrieve(req: RetrieveRequest):
        if atlas is None:
            raise ServiceError("no_atlas", "service started without an atlas",
                               status=503)
        try:
            pts = np.asarray(req.points, dtype=float)
        except (ValueError, TypeError) as exc:
            raise ServiceError("bad_request", f"ragged points array: {exc}") from exc
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
            raise ServiceError("bad_request",
                               "points must be at least 3 [x, y] pairs")
        if not np.isfinite(pts).all():
            raise ServiceError("bad_request", "points must be finite")
        query = normalize(pts)
        hits = atlas.retrieve(query, k=req.k, threshold=req.threshold)
        return {
            "query": query.tolist(),
            "hits": [
                {
                    "mech_id": h.mech_id,
                    "joint_id": h.joint_id,
                    "distance": h.distance,
                    "above_threshold": h.above_threshold,
                    "curve": h.curve.tolist(),
                    "mechanism": _mech_payload(h.mechanism, h.mech_id),
                }
                for h in hits
            ],
        }

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
