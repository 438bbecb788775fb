from fastapi import APIRouter, Depends

from core.security import require_api_key
from routes.errors import to_http
from schemas.api import CertifyRequest, SolveRequest
from schemas.configuration import ConfigurationFile
from services import exppoly_service, geometry_service, optimize_service, rootfinder_service

router = APIRouter(
    prefix="/v1/resonances",
    tags=["Resonances"],
    dependencies=[Depends(require_api_key)],
)


@router.post("/solve")
def solve(request: SolveRequest):
    """
    Zeros of det Γ inside the window, with multiplicities.
    With resonances_only the list is restricted to the closed lower half-plane.
    """
    try:
        alpha, config = request.to_domain()
        geometry_service.check_lengths(alpha, config)
        find = rootfinder_service.resonances if request.resonances_only else rootfinder_service.find_zeros
        roots = find(alpha, config, request.window)
    except ValueError as e:
        raise to_http(e)
    return {"roots": [r.to_json() for r in roots]}


@router.post("/certify")
def certify(request: CertifyRequest):
    try:
        alpha, config = request.to_domain()
        certificate = optimize_service.certify(alpha, config, request.k.value, request.mode, request.tol)
    except ValueError as e:
        raise to_http(e)
    return {"k": request.k.model_dump(), **certificate.to_json()}


@router.post("/expand")
def expand(request: ConfigurationFile):
    """Exponential-polynomial form of (−4π)^N·det Γ, with strip constants when ν ≥ 1."""
    try:
        alpha, config = request.to_domain()
        reduced, sub = geometry_service.reduce(alpha, config)
        ep = exppoly_service.expand(reduced, sub)
        payload = {"n": ep.n, "nu": ep.nu, **ep.to_json()}
        if ep.nu >= 1:
            payload["bounds"] = exppoly_service.strip_bounds(ep, reduced, sub).model_dump()
    except ValueError as e:
        raise to_http(e)
    return payload
