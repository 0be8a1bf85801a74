"""
Scenario endpoints: validate, run, sweep and oracle cross-checks.

Simulations are CPU bound and run in the default executor so the event
loop keeps serving other requests.
"""
import asyncio
import logging
from typing import Any, Dict, Optional

from fastapi import APIRouter, Body, HTTPException, Query, Request
from slowapi import Limiter
from slowapi.util import get_remote_address

from app.core.config import settings
from app.models.report import RunReport, SweepReport
from app.models.scenario import SweepRequest
from app.utils import stimulus
from app.utils.monte_carlo import run_sweep
from app.utils.oracle_check import OracleReport, cross_check
from app.utils.report_cache import get_cache
from app.utils.runner import run_scenario
from app.utils.scenario_loader import canonical_json, scenario_from_dict, scenario_hash

logger = logging.getLogger(__name__)

# Rate limiter
limiter = Limiter(key_func=get_remote_address)

router = APIRouter(
    prefix="/scenarios",
    tags=["scenarios"],
    responses={404: {"description": "Not found"}},
)

rate_limit = f"{settings.RATE_LIMIT_REQUESTS}/{settings.RATE_LIMIT_WINDOW}"

EXAMPLE_SCENARIO = {
    "name": "step-droop",
    "topology": "full-system",
    "period": "50ns",
    "cycles": 40,
    "stimulus": {"droop": {"onset": "10T", "duration": "3T", "level": 0.9}},
}


def conditional_rate_limit(limit_string: str):
    """Apply rate limiting only if enabled in settings."""
    def decorator(func):
        if settings.RATE_LIMIT_ENABLED:
            return limiter.limit(limit_string)(func)
        return func
    return decorator


@router.post("/validate", summary="Validate a scenario")
async def validate_scenario(
    document: Dict[str, Any] = Body(..., examples=[EXAMPLE_SCENARIO]),
) -> Dict[str, Any]:
    """Return the normalized scenario with defaults filled in, and its hash."""
    scenario = scenario_from_dict(document)
    return {
        "valid": True,
        "scenario_hash": scenario_hash(scenario),
        "canonical": canonical_json(scenario),
        "scenario": scenario.model_dump(mode="json"),
    }


@router.post(
    "/run",
    summary="Run a scenario",
    response_description="Run report: findings, per-element cycles, metastability log.",
    response_model=RunReport,
)
@conditional_rate_limit(rate_limit)
async def run(
    request: Request,
    document: Dict[str, Any] = Body(..., examples=[EXAMPLE_SCENARIO]),
    seed: Optional[int] = Query(None, ge=0, description="Overrides the scenario's seed"),
) -> RunReport:
    """
    Simulate the scenario and apply its checkers. Identical (scenario, seed)
    requests are answered from the report cache. No artifacts are written.
    """
    scenario = scenario_from_dict(document)
    resolved = stimulus.resolve_seed(scenario, seed)
    cache = get_cache()
    cached = cache.get(scenario_hash(scenario), resolved)
    if cached is not None:
        logger.info(f"Cache hit for '{scenario.name}' seed {resolved}")
        return cached
    loop = asyncio.get_running_loop()
    outcome = await loop.run_in_executor(
        None, lambda: run_scenario(scenario, resolved, write_artifacts=False)
    )
    cache.set(outcome.report)
    return outcome.report


@router.post("/sweep", summary="Monte Carlo sweep", response_model=SweepReport)
@conditional_rate_limit(rate_limit)
async def sweep(request: Request, body: SweepRequest) -> SweepReport:
    """Run every point of the sweep and return the aggregate report."""
    scenario = scenario_from_dict(body.scenario)
    loop = asyncio.get_running_loop()
    return await loop.run_in_executor(
        None, lambda: run_sweep(scenario, body.sweep, limit=settings.MAX_SWEEP_RUNS)
    )


@router.post("/oracle", summary="Cross-check against the reference models", response_model=OracleReport)
@conditional_rate_limit(rate_limit)
async def oracle(
    request: Request,
    document: Dict[str, Any] = Body(..., examples=[EXAMPLE_SCENARIO]),
) -> OracleReport:
    """Compare idealized simulations of the scenario's modules with the interval-algebra models."""
    scenario = scenario_from_dict(document)
    loop = asyncio.get_running_loop()
    return await loop.run_in_executor(None, cross_check, scenario)


@router.get("/cache", summary="Report cache statistics")
async def get_cache_stats() -> Dict[str, Any]:
    try:
        cache = get_cache()
        return {**cache.stats(), "expired_removed": cache.cleanup_expired()}
    except Exception as e:
        logger.error(f"Unexpected error in get_cache_stats: {str(e)}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Failed to retrieve cache stats: {str(e)}")


@router.delete("/cache", summary="Clear the report cache")
async def clear_cache() -> Dict[str, Any]:
    try:
        cache = get_cache()
        cache.clear()
        return {"message": "Cache cleared successfully", "size": cache.size()}
    except Exception as e:
        logger.error(f"Unexpected error in clear_cache: {str(e)}", exc_info=True)
        raise HTTPException(status_code=500, detail=f"Failed to clear cache: {str(e)}")
