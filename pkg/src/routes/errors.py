from fastapi import HTTPException, status

from core.exceptions import (
    BoundaryZeroError,
    ConvergenceError,
    DepthExhaustedError,
    NotARootError,
    SingularGammaError,
    WindingResolutionError,
)

SOLVER_FAILURES = (
    DepthExhaustedError,
    BoundaryZeroError,
    WindingResolutionError,
    SingularGammaError,
    NotARootError,
    ConvergenceError,
)


def to_http(error: ValueError) -> HTTPException:
    """Solver failures answer 422; every other input problem answers 400."""
    if isinstance(error, SOLVER_FAILURES):
        return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(error))
    return HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(error))
