"""FastAPI application wrapping the simulation core.

Errors carry a machine-readable kind so clients can map them onto exit
codes: ``config`` (bad request), ``numeric`` (solver failure), ``io``
(filesystem trouble).
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError, NumericError
from ..harness import ExperimentConfig, run_monte_carlo, run_single
from ..algorithms import make_schedule
from ..selftest import run_selftest
from .schemas import (
    McRequest,
    McResponse,
    RunRequest,
    RunSummaryResponse,
    ScheduleRequest,
    ScheduleResponse,
    SelftestResponse,
)


def _error_payload(kind: str, message: str) -> dict:
    return {"error": {"kind": kind, "message": message}}


def create_app() -> FastAPI:
    app = FastAPI(title="mirror-bandit-lab", version=__version__)

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content=_error_payload("config", str(exc)))

    @app.exception_handler(NumericError)
    async def _numeric_error(request: Request, exc: NumericError):
        return JSONResponse(status_code=500, content=_error_payload("numeric", str(exc)))

    @app.exception_handler(OSError)
    async def _io_error(request: Request, exc: OSError):
        return JSONResponse(status_code=500, content=_error_payload("io", str(exc)))

    @app.get("/health")
    async def health():
        return {"status": "ok", "version": __version__}

    @app.post("/schedule", response_model=ScheduleResponse)
    async def schedule(req: ScheduleRequest):
        s = make_schedule(req.T, req.K, req.alpha, req.mode, req.beta, req.gamma_override)
        return ScheduleResponse(
            T=s.T, K=s.K, alpha=s.alpha, eta=s.eta, epsilon=s.epsilon,
            lam=s.lam, gamma=s.gamma, mode=s.mode, beta=s.beta,
        )

    @app.post("/run", response_model=RunSummaryResponse)
    async def run(req: RunRequest):
        config = ExperimentConfig.from_dict(req.config.model_dump())
        return run_single(config, rep_index=req.rep_index)

    @app.post("/mc", response_model=McResponse)
    async def mc(req: McRequest):
        config = ExperimentConfig.from_dict(req.config.model_dump())
        aggregate = run_monte_carlo(
            config,
            req.out_dir,
            workers=req.workers,
            fmt=req.format,
            write_rows=req.write_rows,
        )
        return McResponse(
            aggregate_path=aggregate["_paths"]["aggregate"],
            rows_path=aggregate["_paths"]["rows"],
            reps=config.reps,
            failed_reps=aggregate["failed_reps"]["count"],
            regret_mean=aggregate["regret"]["mean"],
            coverage_by_level=aggregate["coverage_by_level"],
            ks=aggregate["ks"],
        )

    @app.post("/selftest", response_model=SelftestResponse)
    async def selftest():
        return run_selftest()

    return app
