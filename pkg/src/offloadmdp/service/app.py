"""FastAPI application wrapping the offloading toolkit."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..exceptions import OffloadError, SizingError
from . import handlers, schemas

app = FastAPI(
    title="offloadmdp",
    description=(
        "Finite-horizon offloading planner and simulator: solve policies, "
        "run seeded Monte Carlo experiments, sweep scenario axes, fit energy "
        "curves, and verify the solver against a brute-force oracle."
    ),
    version=__version__,
)


@app.exception_handler(OffloadError)
async def _domain_error(request: Request, exc: OffloadError):
    status = 413 if isinstance(exc, SizingError) else 400
    return JSONResponse(
        status_code=status,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/solve", response_model=schemas.SolveResponse)
def solve(request: schemas.SolveRequest) -> schemas.SolveResponse:
    return handlers.solve(request)


@app.post("/simulate", response_model=schemas.SimulateResponse)
def simulate(request: schemas.SimulateRequest) -> schemas.SimulateResponse:
    return handlers.simulate(request)


@app.post("/sweep", response_model=schemas.SweepResponse)
def sweep(request: schemas.SweepRequest) -> schemas.SweepResponse:
    return handlers.sweep(request)


@app.post("/fit-energy", response_model=schemas.FitEnergyResponse)
def fit_energy(request: schemas.FitEnergyRequest) -> schemas.FitEnergyResponse:
    return handlers.fit_energy(request)


@app.post("/oracle-check", response_model=schemas.OracleCheckResponse)
def oracle_check(request: schemas.OracleCheckRequest) -> schemas.OracleCheckResponse:
    return handlers.run_oracle_check(request)
