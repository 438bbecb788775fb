import math
from typing import Iterable, Optional, Tuple

import numpy as np

from core.exceptions import ConfigurationError, NotAnOptimizerError, UnachievableFrequencyError
from schemas.configuration import CenterConfiguration, StrengthTuple
from schemas.tetra import TetraOptimum
from services import gamma_service

FOUR_PI = 4.0 * math.pi

# Absolute tolerance for recognising an entry as a⋆.
ALPHA_STAR_TOL = 1e-10
ENDPOINT_TOL = 1e-12


def tetra_vertices(edge: float) -> CenterConfiguration:
    """Regular tetrahedron with all six edges of length `edge`."""
    if not edge > 0.0:
        raise ConfigurationError(f"Edge length must be positive, got {edge}.")
    scale = edge / (2.0 * math.sqrt(2.0))
    base = ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1))
    return CenterConfiguration(points=tuple(tuple(scale * c for c in p) for p in base))


def _band(f: float, edge: float) -> Optional[int]:
    """floor(L|f|/π), or None at the excluded points ±lπ/L (l ≥ 1)."""
    x = edge * abs(f) / math.pi
    l = round(x)
    if l >= 1 and abs(x - l) <= ENDPOINT_TOL * max(1.0, x):
        return None
    return int(math.floor(x))


def is_achievable(f: float, edge: float) -> bool:
    return _band(f, edge) is not None


def nmin_classify(f: float, edge: float) -> int:
    """Minimal number of active centers at frequency f: 1 at f = 0, then 2 and 4 on alternating bands."""
    if f == 0.0:
        return 1
    band = _band(f, edge)
    if band is None:
        raise UnachievableFrequencyError(f"f = {f} is a multiple of π/L and is not achievable.")
    return 2 if band % 2 == 0 else 4


def _log_argument(f: float, edge: float, nmin: int) -> float:
    lf = edge * abs(f)
    ratio = lf / math.sin(lf) if nmin == 2 else -lf / (3.0 * math.sin(lf))
    return math.log(ratio)


def rmin_oracle(f: float, edge: float) -> Optional[float]:
    """Minimal decay rate over real tuples; None where f is not achievable."""
    if f == 0.0:
        return 0.0
    try:
        nmin = nmin_classify(f, edge)
    except UnachievableFrequencyError:
        return None
    return _log_argument(f, edge, nmin) / edge


def optimal_alpha_oracle(f: float, edge: float) -> TetraOptimum:
    if f == 0.0:
        raise ConfigurationError("At f = 0 the optimum is k = 0 from a single zero strength; no band applies.")
    nmin = nmin_classify(f, edge)
    log_arg = _log_argument(f, edge, nmin)
    lf = edge * abs(f)
    a = log_arg / (FOUR_PI * edge) - (abs(f) / FOUR_PI) * math.cos(lf) / math.sin(lf)
    alpha = (a, a, None, None) if nmin == 2 else (a, a, a, a)
    return TetraOptimum(
        f=f, edge=edge, branch="nmin2" if nmin == 2 else "nmin4",
        r=log_arg / edge, alpha_star=a, alpha=alpha,
    )


def frontier_curve(f_values: Iterable[float], edge: float) -> Tuple[np.ndarray, np.ndarray]:
    """r_min and n_min along a frequency grid; nan and 0 mark unachievable points."""
    f = np.asarray(list(f_values), dtype=float)
    x = edge * np.abs(f) / math.pi
    nearest = np.round(x)
    excluded = (nearest >= 1) & (np.abs(x - nearest) <= ENDPOINT_TOL * np.maximum(1.0, x))
    band = np.floor(x)
    nmin = np.where(f == 0.0, 1, np.where(band % 2 == 0, 2, 4))
    lf = edge * np.abs(f)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(nmin == 4, -lf / (3.0 * np.sin(lf)), lf / np.sin(lf))
        r = np.where(f == 0.0, 0.0, np.log(ratio) / edge)
    r = np.where(excluded, np.nan, r)
    nmin = np.where(excluded, 0, nmin)
    return r, nmin


def det_identity(A: Iterable[float], kappa: complex, edge: float = 1.0) -> Tuple[complex, complex]:
    """
    (−4πL)^4·det Γ_{a,Y}(κ/L) on the tetrahedron with a = A/(4πL), against the
    closed form Π x_j + e^{iκ}·Σ_j Π_{j'≠j} x_{j'} where x_j = iκ − A_j − e^{iκ}.
    """
    A = np.asarray(list(A), dtype=float)
    config = tetra_vertices(edge)
    alpha = StrengthTuple.from_values(A / (FOUR_PI * edge))
    lhs = (-FOUR_PI * edge) ** 4 * gamma_service.det_gamma(alpha, config, kappa / edge)
    e = np.exp(1j * kappa)
    x = 1j * kappa - A - e
    rhs = np.prod(x) + e * sum(np.prod(np.delete(x, j)) for j in range(4))
    return complex(lhs), complex(rhs)


def det_identity_pair(A: float, kappa: complex, edge: float = 1.0) -> Tuple[complex, complex]:
    """Two active centers at distance L with equal strength: (iκ − A − e^{iκ})(iκ − A + e^{iκ})."""
    config = tetra_vertices(edge).subset((0, 1))
    alpha = StrengthTuple.from_values([A / (FOUR_PI * edge)] * 2)
    lhs = (-FOUR_PI * edge) ** 2 * gamma_service.det_gamma(alpha, config, kappa / edge)
    e = np.exp(1j * kappa)
    rhs = (1j * kappa - A - e) * (1j * kappa - A + e)
    return complex(lhs), complex(rhs)


def optimum_multiplicity(alpha: StrengthTuple, f: float, edge: float) -> int:
    """Order of the zero at the optimal k for an nmin2 optimizer: (# entries equal to a⋆) − 1."""
    optimum = optimal_alpha_oracle(f, edge)
    if optimum.branch != "nmin2":
        raise NotAnOptimizerError(f"f = {f} lies on an nmin4 band; the optimizer is unique there.")
    if alpha.n != 4:
        raise ConfigurationError("The tetrahedron needs four strengths.")
    hits = sum(
        1 for a in alpha.entries
        if not a.infinite and a.im == 0.0 and abs(a.re - optimum.alpha_star) <= ALPHA_STAR_TOL
    )
    if hits < 2:
        raise NotAnOptimizerError(f"{alpha} has fewer than two entries equal to a⋆ = {optimum.alpha_star}.")
    return hits - 1
