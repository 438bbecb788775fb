import math

from fastapi import APIRouter, Depends, Query

from core.security import require_api_key
from routes.errors import to_http
from services import tetra_service

router = APIRouter(
    prefix="/v1/tetra",
    tags=["Tetrahedron"],
    dependencies=[Depends(require_api_key)],
)


@router.get("/oracle")
async def oracle(f: float = Query(...), L: float = Query(math.pi, gt=0.0)):
    """Closed-form minimal decay and optimal strengths on the regular tetrahedron."""
    try:
        if f == 0.0:
            return {"f": 0.0, "L": L, "r_min": 0.0, "nmin": 1, "k": {"re": 0.0, "im": 0.0}}
        return tetra_service.optimal_alpha_oracle(f, L).to_json()
    except ValueError as e:
        raise to_http(e)
