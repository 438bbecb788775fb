from fastapi import APIRouter, Depends

from core.security import require_api_key
from routes.errors import to_http
from schemas.api import EnvelopeRequest
from services import bounds_service

router = APIRouter(
    prefix="/v1/bounds",
    tags=["Bounds"],
    dependencies=[Depends(require_api_key)],
)


@router.post("/envelope")
def envelope(request: EnvelopeRequest):
    try:
        alpha, config = request.to_domain()
        report = bounds_service.check_envelope(alpha, config, request.window)
    except ValueError as e:
        raise to_http(e)
    return report.to_json()
