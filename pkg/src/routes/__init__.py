from .resonance_router import router as resonance_router
from .bounds_router import router as bounds_router
from .tetra_router import router as tetra_router

__all__ = [
    "resonance_router",
    "bounds_router",
    "tetra_router",
]
