import itertools
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from core.config import settings
from core.exceptions import (
    ConfigurationError,
    ConvergenceError,
    NotARootError,
    NotRayAlignedError,
)
from schemas.configuration import INFINITY, CenterConfiguration, ExtendedComplex, StrengthTuple
from schemas.gamma import BetaChart
from schemas.optimize import (
    CertificateMode,
    OptimalityCertificate,
    ParetoPoint,
    PersistenceResult,
    SamplingClass,
    WidthPoint,
)
from services import exppoly_service, gamma_service
from services.geometry_service import check_lengths, reduce

logger = logging.getLogger(__name__)

FOUR_PI = 4.0 * math.pi

# |det Γ(k)| relative to gamma_service.residual_scale below which k counts as a zero.
ROOT_CHECK_TOL = 1e-8
# Relative minor size above which a dissipative entry breaks the vanishing condition.
DISSIPATIVE_MINOR_TOL = 1e-6
PERSISTENCE_TOL = 1e-8
STRUCTURED_SHARE = 0.1
INFINITE_SHARE = 0.2
R_GRID_POINTS = 128
# Largest |Im a| at a grid minimum worth refining as a possible touch of the real axis.
TOUCH_WINDOW = 1e-2
XI_GRID_POINTS = 720
# Minors below this fraction of the largest are dropped before a second Newton attempt.
DROP_MINOR_RATIO = 1e-3


def _threads(threads: Optional[int]) -> int:
    threads = settings.THREADS if threads is None else threads
    return threads if threads > 0 else (os.cpu_count() or 1)


def _relative_residual(values: np.ndarray, distances: np.ndarray, k: complex) -> float:
    det = abs(gamma_service.det_gamma_batch(values, distances, np.array([k]))[0])
    scale = gamma_service.residual_scale(values, distances, k)
    if scale == 0.0:
        # only α = 0 at k = 0 for one center, where det vanishes too
        return float(det)
    return float(det / scale)


# Certification


def _wrap(xi: float) -> float:
    return (xi + math.pi) % (2.0 * math.pi) - math.pi


def _fit_angle(minors: np.ndarray, mode: CertificateMode) -> float:
    scale = max(float(np.abs(minors).max()), settings.MINOR_FLOOR)
    unit = minors / scale

    def objective(xi: float) -> float:
        w = np.exp(-1j * xi) * unit
        res = float(np.abs(w.imag).max())
        if mode == "ray":
            res = max(res, float(np.maximum(-w.real, 0.0).max()))
        return res

    lo, hi = (-math.pi, math.pi) if mode == "ray" else (-math.pi / 2.0, math.pi / 2.0)
    grid = np.linspace(lo, hi, XI_GRID_POINTS + 1)[:-1]
    angles = np.angle(minors[np.abs(minors) > 0])
    if mode == "line":
        angles = (angles + math.pi / 2.0) % math.pi - math.pi / 2.0
    candidates = np.concatenate([grid, angles])
    scores = np.array([objective(x) for x in candidates])
    best = float(candidates[int(np.argmin(scores))])
    delta = 2.0 * (hi - lo) / XI_GRID_POINTS
    refined = optimize.minimize_scalar(
        objective, bounds=(best - delta, best + delta), method="bounded", options={"xatol": 1e-13},
    )
    if refined.success and refined.fun <= objective(best):
        best = float(refined.x)
    if mode == "line":
        return (best + math.pi / 2.0) % math.pi - math.pi / 2.0
    return _wrap(best)


def certify(
    alpha: StrengthTuple,
    config: CenterConfiguration,
    k: complex,
    mode: CertificateMode = "ray",
    tol: Optional[float] = None,
) -> OptimalityCertificate:
    """
    Checks the necessary condition for minimal decay: the first minors
    ∂_{β_j}D_a(b; k) lie on one ray e^{iξ}[0, ∞) (or one line through 0).
    """
    tol = settings.CERT_TOL if tol is None else tol
    check_lengths(alpha, config)
    reduced, sub = reduce(alpha, config)
    if reduced.n == 0:
        raise NotARootError("The all-infinite tuple has no resonances.")
    residual = _relative_residual(reduced.values(), sub.distances, k)
    if residual > ROOT_CHECK_TOL:
        raise NotARootError(f"k = {k} is not a zero: relative |det Γ| = {residual:.3e}.")

    chart = BetaChart(base=alpha)
    minors = gamma_service.first_minors(chart, None, config, k)
    scale = max(float(np.abs(minors).max()), settings.MINOR_FLOOR)
    xi = _fit_angle(minors, mode)
    rotated = np.exp(-1j * xi) * minors / scale
    alignment = float(np.abs(rotated.imag).max())
    if mode == "ray":
        verdicts = tuple(bool(x >= -tol) for x in rotated.real)
    else:
        verdicts = (True,) * alpha.n
    vanishing = tuple(j for j in range(alpha.n) if abs(minors[j]) <= settings.VANISHING_MINOR_TOL * scale)
    violations = tuple(
        j for j, a in enumerate(alpha.entries)
        if not a.infinite and a.im < 0.0 and abs(minors[j]) > DISSIPATIVE_MINOR_TOL * scale
    )
    return OptimalityCertificate(
        minors=tuple(complex(m) for m in minors),
        xi=xi,
        residual=alignment,
        verdicts=verdicts,
        mode=mode,
        tol=tol,
        vanishing=vanishing,
        dissipative_minor_violations=violations,
    )


def persistence_check(
    alpha: StrengthTuple,
    config: CenterConfiguration,
    k: complex,
    indices: Optional[Sequence[int]] = None,
    samples: int = 10,
    seed: Optional[int] = None,
) -> List[PersistenceResult]:
    """
    Re-draws every strength whose minor vanishes and checks that k stays a zero of D_a.
    D_a is affine in each coordinate, so a vanishing minor freezes the zero.
    """
    chart = BetaChart(base=alpha)
    minors = gamma_service.first_minors(chart, None, config, k)
    scale = max(float(np.abs(minors).max()), settings.MINOR_FLOOR)
    if indices is None:
        indices = [j for j in range(alpha.n) if abs(minors[j]) <= settings.VANISHING_MINOR_TOL * scale]
    rng = np.random.default_rng(settings.SEED if seed is None else seed)
    spread = 1.0 / (FOUR_PI * max(config.diameter, 1e-12))
    base = chart.base_point
    results = []
    for j in indices:
        worst = 0.0
        for x in rng.standard_t(3, size=samples) * spread:
            beta = chart.beta_of(alpha.replace(j, float(x) if x != 0 else spread))
            value = gamma_service.regularized_det(chart, beta, config, k)
            worst = max(worst, abs(value) / (scale * max(1.0, abs(beta[j] - base[j]))))
        results.append(PersistenceResult(
            index=j, minor=float(abs(minors[j]) / scale), worst=worst, passed=worst <= PERSISTENCE_TOL,
        ))
    return results


# Frontier sampling


def _solve_group(values: np.ndarray, distances: np.ndarray, group: Tuple[int, ...], k: np.ndarray) -> np.ndarray:
    """
    Common value a for the entries in `group` that makes det Γ(k) vanish, for each k.
    With T the remaining finite entries, a runs over −eig(B_SS − B_ST·B_TT⁻¹·B_TS)
    where B is Γ with zeros on the group diagonal. Shape (len(k), len(group)).
    """
    work = values.copy()
    work[list(group)] = 0.0
    B = gamma_service.gamma_entries(work, distances, k)
    S = list(group)
    T = [j for j in range(values.shape[0]) if j not in group]
    C = B[:, S][:, :, S]
    if T:
        B_TT = B[:, T][:, :, T]
        B_TS = B[:, T][:, :, S]
        B_ST = B[:, S][:, :, T]
        with np.errstate(all="ignore"):
            try:
                C = C - B_ST @ np.linalg.solve(B_TT, B_TS)
            except np.linalg.LinAlgError:
                C = np.stack([
                    C[i] - B_ST[i] @ np.linalg.lstsq(B_TT[i], B_TS[i], rcond=None)[0] for i in range(len(k))
                ])
    if len(S) == 1:
        return -C[:, :, 0]
    return -np.linalg.eigvals(C)


def _track_branches(a: np.ndarray) -> np.ndarray:
    """Reorders each row of a (r-grid × group) so that column b follows one continuous eigenvalue."""
    tracked = a.copy()
    if a.shape[1] == 1:
        return tracked
    for i in range(1, a.shape[0]):
        prev, cur = tracked[i - 1], a[i]
        if not (np.all(np.isfinite(prev)) and np.all(np.isfinite(cur))):
            continue
        rows, cols = optimize.linear_sum_assignment(np.abs(prev[:, None] - cur[None, :]))
        tracked[i, rows] = cur[cols]
    return tracked


def _first_crossing(
    values: np.ndarray,
    distances: np.ndarray,
    group: Tuple[int, ...],
    f: float,
    r_grid: np.ndarray,
    feasible_class: SamplingClass,
) -> Optional[Tuple[float, complex]]:
    """
    Smallest r at which one group value a(f − ir) is admissible: real for real tuples,
    in the closed lower half-plane for dissipative ones. Every eigenvalue branch is
    followed along the grid; sign changes of Im a are solved by brentq and touches
    without a sign change by a bounded minimisation of |Im a|.
    """
    a = _track_branches(_solve_group(values, distances, group, f - 1j * r_grid))
    finite = np.all(np.isfinite(a), axis=1)
    h = a.imag
    dissipative = feasible_class == "dissipative"

    def branch(x: float, b: int) -> complex:
        cand = _solve_group(values, distances, group, np.array([f - 1j * x]))[0]
        guess = complex(np.interp(x, r_grid, a[:, b].real), np.interp(x, r_grid, a[:, b].imag))
        return complex(cand[int(np.argmin(np.abs(cand - guess)))])

    def admissible(value: complex) -> Optional[complex]:
        tol = 1e-9 * (1.0 + abs(value))
        if dissipative:
            return complex(value.real, min(value.imag, 0.0)) if value.imag <= tol else None
        return complex(value.real, 0.0) if abs(value.imag) <= tol else None

    if finite[0]:
        for b in np.argsort(h[0]):
            value = admissible(complex(a[0, b]))
            if value is not None:
                return float(r_grid[0]), value

    for i in range(r_grid.size - 1):
        if not (finite[i] and finite[i + 1]):
            continue
        lo, hi = float(r_grid[i]), float(r_grid[i + 1])
        hits: List[Tuple[float, int]] = []
        for b in range(a.shape[1]):
            h0, h1 = h[i, b], h[i + 1, b]
            crossing = h0 > 0.0 > h1 or (not dissipative and h0 < 0.0 < h1)
            if h1 == 0.0:
                hits.append((hi, b))
            elif crossing:
                try:
                    r = optimize.brentq(lambda x, b=b: branch(x, b).imag, lo, hi, xtol=1e-15, rtol=1e-14)
                except ValueError:
                    continue
                hits.append((float(r), b))
            elif (
                i > 0 and finite[i - 1]
                and np.sign(h[i - 1, b]) == np.sign(h0) == np.sign(h1) != 0.0
                and abs(h0) <= min(abs(h[i - 1, b]), abs(h1))
                and abs(h0) <= TOUCH_WINDOW * (1.0 + abs(a[i, b]))
            ):
                res = optimize.minimize_scalar(
                    lambda x, b=b: abs(branch(x, b).imag),
                    bounds=(float(r_grid[i - 1]), hi), method="bounded", options={"xatol": 1e-15},
                )
                hits.append((float(res.x), b))
        found = []
        for r, b in hits:
            value = admissible(branch(r, b))
            if value is not None:
                found.append((r, value))
        if found:
            return min(found, key=lambda item: item[0])
    return None


def _structured_patterns(n: int) -> List[Tuple[int, ...]]:
    """Equal-strength groups with every other entry at ∞: the full set, pairs, then the rest."""
    subsets = [s for size in range(1, n + 1) for s in itertools.combinations(range(n), size)]
    order = {n: 0, 2: 1}
    return sorted(subsets, key=lambda s: (order.get(len(s), 2), len(s), s))


def _draw_strength(rng: np.random.Generator, spread: float, feasible_class: SamplingClass) -> complex:
    re = float(rng.standard_t(3)) * spread
    if feasible_class == "dissipative" and rng.random() < 0.5:
        return complex(re, -abs(float(rng.standard_t(3))) * spread)
    return complex(re, 0.0)


def _point_from(
    config: CenterConfiguration,
    active: Tuple[int, ...],
    entries: dict,
    f: float,
    r: float,
) -> Optional[ParetoPoint]:
    alpha = StrengthTuple(entries=tuple(
        ExtendedComplex.of(entries[j]) if j in entries else INFINITY for j in range(config.n)
    ))
    sub = config.subset(active)
    values = np.array([entries[j] for j in active], dtype=complex)
    k = complex(f, -r)
    if _relative_residual(values, sub.distances, k) > ROOT_CHECK_TOL:
        return None
    return ParetoPoint(f=f, r=r, alpha=alpha, k=k, source="sampled")


def _sample_at(
    config: CenterConfiguration,
    feasible_class: SamplingClass,
    f: float,
    budget: int,
    seed: int,
    index: int,
    r_max: float,
) -> Optional[ParetoPoint]:
    if feasible_class == "dissipative" and f <= 0.0:
        # one center with α = if/(4π) puts a zero exactly at k = f
        return _point_from(config, (0,), {0: 1j * f / FOUR_PI}, f, 0.0)

    rng = np.random.default_rng([seed, index])
    n = config.n
    spread = 1.0 / (FOUR_PI * max(config.diameter, 1e-12))
    # quadratic spacing resolves small r, the uniform part the steep growth near band edges
    r_grid = np.union1d(
        r_max * np.linspace(0.0, 1.0, R_GRID_POINTS) ** 2,
        np.linspace(0.0, r_max, 2 * R_GRID_POINTS + 1),
    )
    patterns = _structured_patterns(n)
    n_structured = min(len(patterns), max(1, int(math.ceil(STRUCTURED_SHARE * budget))))
    best: Optional[ParetoPoint] = None

    def consider(active: Tuple[int, ...], fixed: dict, group: Tuple[int, ...]) -> None:
        nonlocal best
        sub = config.subset(active)
        local = {j: i for i, j in enumerate(active)}
        values = np.zeros(len(active), dtype=complex)
        for j, v in fixed.items():
            values[local[j]] = v
        found = _first_crossing(values, sub.distances, tuple(local[j] for j in group), f, r_grid, feasible_class)
        if found is None:
            return
        r, a = found
        if best is not None:
            # on a tie the tuple with fewer active centers wins; its zero is simple
            tie = 1e-12 * (1.0 + best.r)
            if r > best.r + tie or (r >= best.r - tie and len(active) >= best.alpha.n_finite):
                return
        entries = dict(fixed)
        entries.update({j: a for j in group})
        point = _point_from(config, active, entries, f, max(r, 0.0))
        if point is not None:
            best = point

    # 1. Structured patterns
    for group in patterns[:n_structured]:
        consider(group, {}, group)

    # 2. Random tuples with one entry solved for
    for _ in range(max(budget - n_structured, 0)):
        finite = rng.random(n) >= INFINITE_SHARE
        solved = int(rng.integers(n))
        finite[solved] = True
        active = tuple(int(j) for j in np.flatnonzero(finite))
        fixed = {j: _draw_strength(rng, spread, feasible_class) for j in active if j != solved}
        consider(active, fixed, (solved,))
    return best


def sample_frontier(
    config: CenterConfiguration,
    feasible_class: SamplingClass,
    f_grid: Iterable[float],
    sample_budget: int,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    r_max: float = 4.0,
) -> List[Optional[ParetoPoint]]:
    """
    Upper bound for r_min at every grid frequency: the smallest decay found over
    structured and random tuples. Entry i is None when nothing was achieved at f_i.
    Real tuples are only sampled at |f| and mirrored, since their frontier is even.
    """
    f_grid = [float(f) for f in f_grid]
    if not f_grid:
        raise ConfigurationError("The frequency grid is empty.")
    if any(b < a for a, b in zip(f_grid, f_grid[1:])):
        raise ConfigurationError("The frequency grid must be sorted.")
    if sample_budget < 1:
        raise ConfigurationError("The sample budget must be at least 1.")
    seed = settings.SEED if seed is None else seed
    per_point = max(1, sample_budget // len(f_grid))

    if feasible_class == "real":
        targets = sorted({abs(f) for f in f_grid})
    else:
        targets = list(dict.fromkeys(f_grid))
    index = {f: i for i, f in enumerate(targets)}

    def run(f: float) -> Optional[ParetoPoint]:
        return _sample_at(config, feasible_class, f, per_point, seed, index[f], r_max)

    with ThreadPoolExecutor(max_workers=_threads(threads)) as pool:
        found = dict(zip(targets, pool.map(run, targets)))

    points: List[Optional[ParetoPoint]] = []
    for f in f_grid:
        point = found[abs(f)] if feasible_class == "real" else found[f]
        if point is not None and point.f != f:
            point = point.model_copy(update={"f": f, "k": complex(f, -point.r)})
        if point is None:
            logger.debug("No resonance achieved at f=%.6g", f)
        points.append(point)
    return points


# Newton refinement


def _minors(values: np.ndarray, distances: np.ndarray, k: complex) -> np.ndarray:
    gamma = gamma_service.gamma_entries(values, distances, k)
    n = values.shape[0]
    out = np.empty(n, dtype=complex)
    for j in range(n):
        keep = [i for i in range(n) if i != j]
        out[j] = np.linalg.det(gamma[np.ix_(keep, keep)]) if keep else 1.0
    return out


def _alignment_equations(minors: np.ndarray, ref: int) -> List[float]:
    return [float((m * np.conj(minors[ref])).imag) for j, m in enumerate(minors) if j != ref]


def _solve_square(fun, x0: np.ndarray) -> np.ndarray:
    sol = optimize.root(
        fun, x0, method="hybr",
        options={"xtol": 1e-14, "maxfev": settings.NEWTON_MAX_ITER * (x0.size + 1)},
    )
    if not np.all(np.isfinite(sol.x)) or np.linalg.norm(fun(sol.x)) > 1e-10:
        raise ConvergenceError(f"Newton did not converge: {sol.message}")
    return sol.x


def _drop_small_minors(alpha: StrengthTuple, config: CenterConfiguration, k: complex) -> StrengthTuple:
    """Sends entries with negligible minors to ∞; they do not move the zero."""
    reduced, sub = reduce(alpha, config)
    minors = np.abs(_minors(reduced.values(), sub.distances, k))
    keep = {j for j, m in zip(alpha.finite_indices, minors) if m >= DROP_MINOR_RATIO * minors.max()}
    return StrengthTuple(entries=tuple(a if j in keep else INFINITY for j, a in enumerate(alpha.entries)))


def _refine_reduced(config: CenterConfiguration, f: float, alpha: StrengthTuple, r0: float) -> Tuple[StrengthTuple, float]:
    active = alpha.finite_indices
    sub = config.subset(active)
    values = np.array([alpha.entries[j].re for j in active])
    n = values.size
    if n == 1:
        raise ConvergenceError("A single real center only resonates at f = 0.")
    k0 = complex(f, -r0)
    seed_minors = _minors(values.astype(complex), sub.distances, k0)
    ref = int(np.argmax(np.abs(seed_minors)))
    s0 = gamma_service.hadamard_scale(values.astype(complex), sub.distances, k0)
    s1 = max(float(np.abs(seed_minors).max()) ** 2, settings.MINOR_FLOOR)

    def equations(x: np.ndarray) -> np.ndarray:
        k = complex(f, -x[-1])
        a = x[:-1].astype(complex)
        det = gamma_service.det_gamma_batch(a, sub.distances, np.array([k]))[0] / s0
        minors = _minors(a, sub.distances, k)
        return np.array([det.real, det.imag] + [e / s1 for e in _alignment_equations(minors, ref)])

    x = _solve_square(equations, np.append(values, r0))
    entries = list(alpha.entries)
    for j, a in zip(active, x[:-1]):
        entries[j] = ExtendedComplex.of(float(a))
    return StrengthTuple(entries=tuple(entries)), float(x[-1])


def refine_extremal(
    config: CenterConfiguration,
    f: float,
    seed_alpha: StrengthTuple,
    seed_r: float,
    tol: Optional[float] = None,
) -> Tuple[ParetoPoint, OptimalityCertificate]:
    """
    Newton on the square system Re D = Im D = 0, Im(m_j·conj m_ref) = 0 in the real
    unknowns (α over the finite entries, r) at fixed Re k = f. Infinite entries stay
    infinite. The result must pass the ray certificate.
    """
    tol = settings.CERT_TOL if tol is None else tol
    check_lengths(seed_alpha, config)
    if not seed_alpha.is_real:
        raise ConfigurationError("Refinement works over real strengths.")
    if f == 0.0:
        alpha = StrengthTuple(entries=(ExtendedComplex.of(0.0),) + (INFINITY,) * (config.n - 1))
        certificate = certify(alpha, config, 0j, "ray", tol)
        return ParetoPoint(f=0.0, r=0.0, alpha=alpha, k=0j, source="refined", certificate=certificate), certificate
    if seed_alpha.n_finite == 0:
        raise ConfigurationError("The seed tuple has no finite entries.")

    attempts = [seed_alpha]
    try:
        trimmed = _drop_small_minors(seed_alpha, config, complex(f, -seed_r))
        if trimmed.n_finite >= 2 and trimmed != seed_alpha:
            attempts.append(trimmed)
    except np.linalg.LinAlgError:
        pass

    last_error: Optional[Exception] = None
    for attempt in attempts:
        try:
            alpha, r = _refine_reduced(config, f, attempt, seed_r)
        except ConvergenceError as e:
            logger.debug("Refinement attempt with %d active centers failed: %s", attempt.n_finite, e)
            last_error = e
            continue
        if r < -settings.POLISH_TOL:
            last_error = ConvergenceError(f"Newton reached r = {r:.3e} above the real axis.")
            continue
        r = max(r, 0.0)
        k = complex(f, -r)
        reduced, sub = reduce(alpha, config)
        minors = _minors(reduced.values(), sub.distances, k)
        ref = int(np.argmax(np.abs(minors)))
        products = (minors * np.conj(minors[ref])).real
        if np.any(products < -tol * np.abs(minors[ref]) ** 2):
            raise NotRayAlignedError(f"Stationary at r = {r:.12g} but the minors are not on one ray.")
        certificate = certify(alpha, config, k, "ray", tol)
        if not certificate.passed:
            if not all(certificate.verdicts):
                raise NotRayAlignedError(f"Stationary at r = {r:.12g} but the minors are not on one ray.")
            last_error = ConvergenceError(f"Certificate residual {certificate.residual:.3e} exceeds {tol:.1e}.")
            continue
        point = ParetoPoint(f=f, r=r, alpha=alpha, k=k, source="refined", certificate=certificate)
        return point, certificate
    raise last_error or ConvergenceError("Refinement failed.")


# Perturbation of a zero


def _z_derivative(chart: BetaChart, config: CenterConfiguration, k: complex, order: int) -> complex:
    """∂_z^order D_a(b; z) at k, where D_a(b; ·) = det Γ of the reduced tuple."""
    reduced, sub = reduce(chart.base, config)
    n = reduced.n
    if n <= settings.MAX_EXPANSION_N:
        ep = exppoly_service.expand(reduced, sub)
        return exppoly_service.determinant_scale(n) * exppoly_service.evaluate(ep, k, order)
    # Cauchy integral on a circle, trapezoidal rule
    points = 64
    radius = 0.05 * (1.0 + abs(k))
    theta = 2.0 * math.pi * np.arange(points) / points
    values = gamma_service.det_gamma_batch(reduced.values(), sub.distances, k + radius * np.exp(1j * theta))
    return complex(math.factorial(order) * np.mean(values * np.exp(-1j * order * theta)) / radius ** order)


def perturb_first_order(
    chart: BetaChart,
    config: CenterConfiguration,
    k: complex,
    multiplicity: int,
    direction: Sequence[complex],
) -> complex:
    """
    Leading coefficient C of an m-fold zero moving along β = b + ζv:
    k(ζ) ≈ k + (Cζ)^{1/m} with C = −m!·Σ_j v_j ∂_{β_j}D_a(b; k) / ∂_z^m D_a(b; k).
    """
    chart.check(config)
    v = np.asarray(list(direction), dtype=complex)
    if v.shape != (chart.size,):
        raise ConfigurationError(f"Direction must have {chart.size} components.")
    if multiplicity < 1:
        raise ConfigurationError("Multiplicity must be positive.")
    minors = gamma_service.first_minors(chart, None, config, k)
    dz = _z_derivative(chart, config, k, multiplicity)
    if abs(dz) <= settings.MINOR_FLOOR:
        raise ConfigurationError(f"∂_z^{multiplicity} D vanishes at k = {k}; the zero has higher multiplicity.")
    return complex(-math.factorial(multiplicity) * np.dot(v, minors) / dz)


def predicted_branches(k: complex, coefficient: complex, multiplicity: int, zeta: complex) -> np.ndarray:
    """The m predicted zeros k + ω^j·(Cζ)^{1/m}."""
    root = (coefficient * zeta) ** (1.0 / multiplicity)
    return k + root * np.exp(2j * math.pi * np.arange(multiplicity) / multiplicity)


# Widths


def width_of(k: complex) -> Tuple[float, float]:
    """(E, ε) = (Re k², 2|Im k²|)."""
    k2 = k * k
    return float(k2.real), float(2.0 * abs(k2.imag))


def refine_width(
    config: CenterConfiguration,
    energy: float,
    seed_alpha: StrengthTuple,
    seed_k: complex,
    tol: Optional[float] = None,
) -> WidthPoint:
    """
    Newton on the unknowns (α, Re k, Im k) with Re D = Im D = 0, Re k² = E and the
    minors on one line; the ray certificate must pass at the result.
    """
    tol = settings.CERT_TOL if tol is None else tol
    active = seed_alpha.finite_indices
    if len(active) < 2:
        raise ConvergenceError("Width refinement needs at least two finite strengths.")
    sub = config.subset(active)
    values = np.array([seed_alpha.entries[j].re for j in active])
    seed_minors = _minors(values.astype(complex), sub.distances, seed_k)
    ref = int(np.argmax(np.abs(seed_minors)))
    s0 = gamma_service.hadamard_scale(values.astype(complex), sub.distances, seed_k)
    s1 = max(float(np.abs(seed_minors).max()) ** 2, settings.MINOR_FLOOR)
    e_scale = max(1.0, abs(energy))

    def equations(x: np.ndarray) -> np.ndarray:
        k = complex(x[-2], x[-1])
        a = x[:-2].astype(complex)
        det = gamma_service.det_gamma_batch(a, sub.distances, np.array([k]))[0] / s0
        minors = _minors(a, sub.distances, k)
        return np.array(
            [det.real, det.imag, ((k * k).real - energy) / e_scale]
            + [e / s1 for e in _alignment_equations(minors, ref)]
        )

    x = _solve_square(equations, np.concatenate([values, [seed_k.real, seed_k.imag]]))
    entries = list(seed_alpha.entries)
    for j, a in zip(active, x[:-2]):
        entries[j] = ExtendedComplex.of(float(a))
    alpha = StrengthTuple(entries=tuple(entries))
    k = complex(x[-2], x[-1])
    if k.imag > settings.POLISH_TOL * (1.0 + abs(k)):
        raise ConvergenceError(f"Width refinement reached k = {k} above the real axis.")
    certificate = certify(alpha, config, k, "ray", tol)
    if not certificate.passed:
        raise NotRayAlignedError(f"Width-stationary point at k = {k} fails the ray certificate.")
    e, eps = width_of(k)
    return WidthPoint(energy=e, width=eps, alpha=alpha, k=k, source="refined")


def width_frontier(
    config: CenterConfiguration,
    feasible_class: SamplingClass,
    energy_range: Tuple[float, float],
    grid: int = 20,
    sample_budget: int = 2000,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    refine: bool = True,
    r_max: float = 4.0,
) -> List[WidthPoint]:
    """
    Smallest width ε per energy bin. The minimum at fixed E sits on the decay frontier,
    so frontier points over f ≥ 0 are mapped to (E, ε) and binned.
    """
    e_lo, e_hi = energy_range
    if not 0.0 <= e_lo <= e_hi:
        raise ConfigurationError(f"Energy range must satisfy 0 ≤ E1 ≤ E2, got {energy_range}.")
    if grid < 1:
        raise ConfigurationError("The energy grid needs at least one bin.")
    # E = f² − r² ≤ E2 needs f ≤ sqrt(E2 + r_max²); E moves fast where r does, so the grid is fine
    f_grid = np.linspace(math.sqrt(e_lo), math.sqrt(e_hi + r_max ** 2), max(32 * grid, 128) + 1)
    frontier = [p for p in sample_frontier(config, feasible_class, f_grid, sample_budget, seed, threads, r_max) if p]
    edges = np.linspace(e_lo, e_hi, grid + 1)
    result: List[WidthPoint] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        best: Optional[WidthPoint] = None
        for p in frontier:
            e, eps = width_of(p.k)
            if (lo <= e <= hi if hi == edges[-1] else lo <= e < hi) and (best is None or eps < best.width):
                best = WidthPoint(energy=e, width=eps, alpha=p.alpha, k=p.k, source="sampled")
        if best is None:
            continue
        if refine and best.width > 0.0 and best.alpha.is_real:
            try:
                refined = refine_width(config, best.energy, best.alpha, best.k)
                if refined.width <= best.width:
                    best = refined
            except (ConvergenceError, NotARootError) as e:
                logger.warning("Width refinement at E=%.6g failed: %s", best.energy, e)
        result.append(best)
    return result
