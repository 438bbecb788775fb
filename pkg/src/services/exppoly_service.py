import itertools
import logging
import math
from functools import lru_cache
from typing import List, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import optimize

from core.config import settings
from core.exceptions import ConfigurationError, ExpansionUnavailableError
from schemas.configuration import CenterConfiguration, StrengthTuple
from schemas.exppoly import ExponentialPolynomial, ExpTerm, StripBounds
from services.geometry_service import check_lengths

logger = logging.getLogger(__name__)

FOUR_PI = 4.0 * math.pi

# Relative size below which a merged delay group counts as cancelled.
CANCELLATION_TOL = 1e-13
# Added to every offset so that points on the boundary curves are strictly inside.
OFFSET_MARGIN = 1e-9


def determinant_scale(n: int) -> float:
    """det Γ = determinant_scale(n)·D(z)."""
    return (-FOUR_PI) ** (-n)


def _permutation_sign(perm: Tuple[int, ...]) -> int:
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def expand(alpha: StrengthTuple, config: CenterConfiguration) -> ExponentialPolynomial:
    """
    Leibniz expansion of D(z) = det(−4πΓ(z)). After scaling, the diagonal is
    iz − 4πα_j and the off-diagonal is e^{izd}/d, so every permutation contributes
    sign(σ)·Π_fixed (iz − 4πα_j)·Π_moved 1/d with delay Σ_moved d.
    """
    check_lengths(alpha, config)
    n = alpha.n
    if n > settings.MAX_EXPANSION_N:
        raise ExpansionUnavailableError(
            f"Expansion is limited to N ≤ {settings.MAX_EXPANSION_N}; got N = {n}."
        )
    if n == 0:
        raise ExpansionUnavailableError("The empty tuple has no expansion.")
    values = alpha.values()
    distances = config.distances

    @lru_cache(maxsize=None)
    def fixed_product(fixed: Tuple[int, ...]) -> np.ndarray:
        poly = np.array([1.0 + 0j])
        for j in fixed:
            poly = P.polymul(poly, np.array([-FOUR_PI * values[j], 1j]))
        return poly

    # 1. Enumerate permutations in lexicographic order
    contributions: List[Tuple[float, np.ndarray]] = []
    for perm in itertools.permutations(range(n)):
        moved = [j for j in range(n) if perm[j] != j]
        fixed = tuple(j for j in range(n) if perm[j] == j)
        delay = float(sum(distances[j, perm[j]] for j in moved))
        weight = _permutation_sign(perm) / float(np.prod([distances[j, perm[j]] for j in moved])) if moved else 1.0
        contributions.append((delay, weight * fixed_product(fixed)))

    # 2. Group by delay (stable sort keeps the permutation rank inside a group)
    contributions.sort(key=lambda c: c[0])
    merge_tol = settings.DELAY_MERGE_TOL * n * max(config.diameter, 1.0)
    groups: List[Tuple[float, np.ndarray]] = []
    for delay, poly in contributions:
        if groups and delay - groups[-1][0] <= merge_tol:
            q, acc = groups[-1]
            groups[-1] = (q, P.polyadd(acc, poly))
        else:
            groups.append((delay if groups else 0.0, poly.astype(complex)))

    # 3. Drop cancelled groups and trailing zero coefficients
    scale = max(float(np.max(np.abs(poly))) for _, poly in groups)
    terms = []
    for q, poly in groups:
        poly = np.asarray(poly, dtype=complex)
        magnitude = np.abs(poly)
        if q > 0.0 and magnitude.max() <= CANCELLATION_TOL * scale:
            logger.debug("Delay group q=%.6g cancelled", q)
            continue
        cut = len(poly)
        while cut > 1 and magnitude[cut - 1] <= CANCELLATION_TOL * scale:
            cut -= 1
        terms.append(ExpTerm(q=q, coeffs=tuple(complex(c) for c in poly[:cut])))
    return ExponentialPolynomial(terms=tuple(terms), n=n, diameter=config.diameter)


def evaluate(ep: ExponentialPolynomial, z: Union[complex, np.ndarray], derivative_order: int = 0):
    """
    Σ_l p_l(z)e^{izq_l} or its z-derivative of the given order, by Leibniz:
    ∂^m[p·e^{iqz}] = Σ_j C(m,j)·p^{(j)}(z)·(iq)^{m−j}·e^{iqz}.
    """
    if derivative_order < 0:
        raise ConfigurationError("Derivative order must be non-negative.")
    z_arr = np.asarray(z, dtype=complex)
    total = np.zeros(z_arr.shape, dtype=complex)
    m = derivative_order
    for term in ep.terms:
        coeffs = term.array
        phase = np.exp(1j * term.q * z_arr)
        acc = np.zeros(z_arr.shape, dtype=complex)
        for j in range(min(m, term.degree) + 1):
            dp = P.polyder(coeffs, j) if j else coeffs
            acc = acc + math.comb(m, j) * P.polyval(z_arr, dp) * (1j * term.q) ** (m - j)
        total = total + acc * phase
    if np.ndim(z) == 0:
        return complex(total)
    return total


def _root_modulus_bound(coeffs_ascending: np.ndarray) -> float:
    """Upper bound for the real roots: the largest root modulus."""
    roots = P.polyroots(coeffs_ascending)
    return float(np.abs(roots).max()) if roots.size else 0.0


def _upper_offset(ep: ExponentialPolynomial, alpha_moduli: np.ndarray) -> float:
    """
    Offset c12 such that no zero lies above −c11·ln(|Re k|+1) + c12.
    Above the real axis the polynomial root bound R applies; below it the leading
    term Π(iz − 4πα_j) beats the rest once |z| ≥ max(2ρ, 1) and the exponential
    growth is capped by the curve itself.
    """
    n = ep.n
    q = ep.q_max
    c11 = 2.0 / q
    rho = FOUR_PI * alpha_moduli
    rho_max = float(rho.max()) if rho.size else 0.0
    tail = np.zeros(n + 1)
    for term in ep.terms[1:]:
        mags = np.abs(term.array)
        tail[: mags.size] += mags
    c_sum = float(tail.sum())
    maxcoeff = max(float(np.abs(t.array).max()) for t in ep.terms[1:])

    # Π(t − ρ_j) − Σ_k C_k t^k
    poly = np.array([1.0])
    for r in rho:
        poly = P.polymul(poly, np.array([-r, 1.0]))
    poly = P.polysub(poly, tail)
    r_upper = max(rho_max, _root_modulus_bound(poly))
    r_lower = max(2.0 * rho_max, 1.0)

    candidates = [
        math.log(4.0 * max(math.factorial(n) - 1, 1) * maxcoeff) / q,
        r_upper + c11 * math.log(r_upper + 1.0),
        c11 * math.log(r_lower + 1.0),
        math.log(2.0 ** (n + 2) * c_sum) / q,
    ]
    return max(candidates) + OFFSET_MARGIN


def _lower_offset(ep: ExponentialPolynomial) -> float:
    """
    Offset c22 such that no zero lies below −c21·ln(|Re k|+1) − c22.
    With Δ = q_ν − q_{ν−1}, a zero far down needs
    |p_ν(z)|·e^{Δ|Im z|} ≤ Σ_{l<ν}|p_l(z)|, which caps |Im z| by
    max((K⁺ + N ln 2)/Δ, Y*, R3) above the curve.
    """
    n = ep.n
    delta = ep.q_max - ep.q_second
    lead_term = ep.terms[-1].array
    lead = abs(lead_term[-1])
    degree = lead_term.size - 1
    c_rest = float(sum(np.abs(t.array).sum() for t in ep.terms[:-1]))
    roots = P.polyroots(lead_term) if degree >= 1 else np.array([])
    r3 = max(2.0 * float(np.abs(roots).max()) if roots.size else 0.0, 1.0)
    k = math.log(c_rest * 2.0 ** degree / lead)

    def gap(y: float) -> float:
        return delta * y - k - n * math.log(2.0 * y)

    y0 = max(1.0, n / delta)
    if gap(y0) >= 0.0:
        y_star = y0
    else:
        hi = 2.0 * y0
        while gap(hi) < 0.0:
            hi *= 2.0
        y_star = optimize.brentq(gap, y0, hi, xtol=1e-12)
    return max((max(k, 0.0) + n * math.log(2.0)) / delta, y_star, r3) + OFFSET_MARGIN


def strip_bounds(ep: ExponentialPolynomial, alpha: StrengthTuple, config: CenterConfiguration) -> StripBounds:
    if ep.nu < 1:
        raise ExpansionUnavailableError("A single delay (N = 1) has no logarithmic strip.")
    alpha_moduli = np.abs(alpha.values())
    return StripBounds(
        c11=2.0 / ep.q_max,
        c12=_upper_offset(ep, alpha_moduli),
        c21=ep.n / (ep.q_max - ep.q_second),
        c22=_lower_offset(ep),
        uniform_slope=uniform_slope(config.n, config.diameter),
        uniform_offset=uniform_constant(config),
    )


def bounds_for(alpha: StrengthTuple, config: CenterConfiguration) -> Tuple[ExponentialPolynomial, StripBounds]:
    ep = expand(alpha, config)
    return ep, strip_bounds(ep, alpha, config)


def _permanent(matrix: np.ndarray) -> float:
    """Ryser's formula; matrices here are at most MAX_EXPANSION_N wide."""
    n = matrix.shape[0]
    if n == 0:
        return 1.0
    total = 0.0
    for size in range(1, n + 1):
        for cols in itertools.combinations(range(n), size):
            total += (-1) ** size * float(np.prod(matrix[:, cols].sum(axis=1)))
    return (-1) ** n * total


def _max_delay(distances: np.ndarray) -> float:
    rows, cols = optimize.linear_sum_assignment(distances, maximize=True)
    return float(distances[rows, cols].sum())


def uniform_slope(n: int, diameter: float) -> float:
    if n < 2:
        raise ConfigurationError("The uniform envelope needs at least two centers.")
    return 2.0 / (n * diameter)


@lru_cache(maxsize=64)
def _uniform_constant(points: Tuple[Tuple[float, float, float], ...]) -> float:
    config = CenterConfiguration(points=points)
    offsets: List[float] = []
    for size in range(2, config.n + 1):
        for subset in itertools.combinations(range(config.n), size):
            d = config.distances[np.ix_(subset, subset)]
            weights = np.where(np.eye(size, dtype=bool), 0.0, 1.0 / np.where(d > 0, d, 1.0))
            s = _permanent(np.eye(size) + weights) - 1.0
            q = _max_delay(d)
            offsets.append(math.log(16.0 * 4.0 ** (size - 2) * max(s, 1.0)) / q)
    c1 = max(offsets) + OFFSET_MARGIN
    logger.debug("Uniform envelope constant for %d centers: %.6g", config.n, c1)
    return c1


def uniform_constant(config: CenterConfiguration) -> float:
    """
    Offset c1(Y) valid for every tuple in (C₋ ∪ R ∪ {∞})^N at positive frequency.

    For Re z = x > 0 and Im α_j ≤ 0 one has |iz − 4πα_j| ≥ x, and such tuples have no
    zeros with x > 0 above the real axis. On each reduced sub-configuration Ỹ
    (size Ñ, largest delay Q̃, S = Σ_{σ≠id} Π_moved 1/d) a zero needs
    x² ≤ S·e^{Q̃|Im z|} when x ≥ 1, so (1/Q̃)·ln(16·4^{Ñ−2}·max(S, 1)) is enough
    with slope 2/Q̃ ≥ 2/(N·diam Y).
    """
    if config.n < 2:
        raise ConfigurationError("The uniform envelope needs at least two centers.")
    if config.n > settings.MAX_EXPANSION_N:
        raise ExpansionUnavailableError(
            f"The uniform constant is limited to N ≤ {settings.MAX_EXPANSION_N}; got N = {config.n}."
        )
    return _uniform_constant(config.points)


def uniform_envelope(n: int, diameter: float, f, c1: float):
    """(2/(N·diam))·ln(|f|+1) − c1: a lower bound on the minimal decay over the dissipative class."""
    if n < 2:
        raise ConfigurationError("The uniform envelope needs at least two centers.")
    values = uniform_slope(n, diameter) * np.log(np.abs(np.asarray(f, dtype=float)) + 1.0) - c1
    return float(values) if np.ndim(f) == 0 else values


def uniform_envelope_for(config: CenterConfiguration, f):
    return uniform_envelope(config.n, config.diameter, f, uniform_constant(config))
