import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple

import numpy as np

from core.config import settings
from core.exceptions import (
    BoundaryZeroError,
    DepthExhaustedError,
    SingularGammaError,
    WindingResolutionError,
)
from schemas.configuration import CenterConfiguration, StrengthTuple
from schemas.roots import Box, RootRecord, SearchWindow
from services import gamma_service
from services.geometry_service import reduce

logger = logging.getLogger(__name__)

AnalyticFunction = Callable[[np.ndarray], np.ndarray]

INITIAL_NODES = 16
MAX_NODES = 1 << 17
# Smallest parameter step tolerated before a phase jump is blamed on a zero on the contour.
MIN_STEP = 1e-13
MAX_PRESET_SPLIT = 256
GAUSS_NODES = 16
MOMENT_PANELS = (4, 16, 64)
# Largest |count − m| for which the contour moment is trusted.
MOMENT_TOL = 1e-6


def _box_path(box: Box) -> Callable[[np.ndarray], np.ndarray]:
    re_min, re_max, im_min, im_max = box
    corners = np.array([
        complex(re_min, im_min),
        complex(re_max, im_min),
        complex(re_max, im_max),
        complex(re_min, im_max),
        complex(re_min, im_min),
    ])

    def path(t: np.ndarray) -> np.ndarray:
        scaled = 4.0 * np.asarray(t, dtype=float)
        edge = np.minimum(np.floor(scaled).astype(int), 3)
        s = scaled - edge
        z = corners[edge] + s * (corners[edge + 1] - corners[edge])
        z[np.asarray(t) >= 1.0] = corners[0]
        return z

    return path


def _circle_path(center: complex, radius: float) -> Callable[[np.ndarray], np.ndarray]:
    def path(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        z = center + radius * np.exp(2j * math.pi * t)
        z[t >= 1.0] = center + radius
        return z

    return path


def _track_phase(
    f: AnalyticFunction,
    path: Callable[[np.ndarray], np.ndarray],
    f_prime: Optional[AnalyticFunction],
    tol: float,
) -> Tuple[int, float]:
    """
    Walks a closed path, halving steps until every phase increment of f is below π/2.
    Returns the winding number and the largest |f| seen on the path.
    """
    t = np.linspace(0.0, 1.0, 4 * INITIAL_NODES + 1)
    z = path(t)
    values = f(z)
    if not np.all(np.isfinite(values)):
        raise WindingResolutionError("The function is not finite on the contour.")

    # 1. Preset the sampling density from |f'/f|
    if f_prime is not None:
        with np.errstate(all="ignore"):
            rate = np.abs(f_prime(z) / values)
        rate = np.where(np.isfinite(rate), rate, 0.0)
        seg = np.abs(np.diff(z)) * np.maximum(rate[:-1], rate[1:])
        splits = np.minimum(np.ceil(seg / (math.pi / 4.0)), MAX_PRESET_SPLIT).astype(int)
        if np.any(splits > 1):
            pieces = [
                np.linspace(t[i], t[i + 1], max(splits[i], 1) + 1)[:-1] for i in range(t.size - 1)
            ]
            t = np.concatenate(pieces + [t[-1:]])
            z = path(t)
            values = f(z)

    # 2. Insert midpoints wherever the phase jumps by π/2 or more
    while True:
        if np.any(values == 0):
            raise BoundaryZeroError("The function vanishes at a contour node.")
        increments = np.angle(values[1:] / values[:-1])
        bad = np.abs(increments) >= math.pi / 2.0
        if not bad.any():
            break
        if t.size > MAX_NODES:
            raise WindingResolutionError("Phase tracking needed too many contour nodes.")
        steps = np.diff(t)
        if steps[bad].min() < MIN_STEP:
            raise BoundaryZeroError("The phase jumps across a vanishing step; a zero sits on the contour.")
        mid_t = 0.5 * (t[:-1] + t[1:])[bad]
        mid_values = f(path(mid_t))
        order = np.argsort(np.concatenate([t, mid_t]), kind="stable")
        t = np.concatenate([t, mid_t])[order]
        values = np.concatenate([values, mid_values])[order]

    total = increments.sum() / (2.0 * math.pi)
    winding = int(round(total))
    if abs(total - winding) > tol:
        raise WindingResolutionError(f"Accumulated phase {total:.6f}·2π is not an integer.")
    return winding, float(np.abs(values).max())


def winding_count(
    f: AnalyticFunction,
    f_prime: Optional[AnalyticFunction],
    box: Box,
    tol: float = settings.WINDING_TOL,
) -> int:
    """(1/2πi)∮ f'/f around the box, counter-clockwise, by phase tracking."""
    return _track_phase(f, _box_path(box), f_prime, tol)[0]


def winding_on_circle(
    f: AnalyticFunction,
    f_prime: Optional[AnalyticFunction],
    center: complex,
    radius: float,
    tol: float = settings.WINDING_TOL,
) -> int:
    return _track_phase(f, _circle_path(center, radius), f_prime, tol)[0]


class _Determinant:
    """det Γ of a reduced tuple as a vectorised analytic function."""

    def __init__(self, values: np.ndarray, distances: np.ndarray):
        self.values = values
        self.distances = distances

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return gamma_service.det_gamma_batch(self.values, self.distances, z)

    def derivative(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self(z) * gamma_service.dz_log_det_batch(self.values, self.distances, z).reshape(z.shape)

    def log_derivative(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return gamma_service.dz_log_det_batch(self.values, self.distances, z).reshape(z.shape)

    def newton_step(self, z: complex, multiplicity: int) -> complex:
        return multiplicity / gamma_service.dz_log_det_values(self.values, self.distances, z)


def contour_moments(log_derivative: AnalyticFunction, box: Box, panels: int) -> Tuple[complex, complex]:
    """
    (1/2πi)∮ f'/f and (1/2πi)∮ z·f'/f around the box, Gauss-Legendre on `panels`
    pieces per edge. The first is the zero count, the second the sum of the zeros.
    """
    nodes, weights = np.polynomial.legendre.leggauss(GAUSS_NODES)
    re_min, re_max, im_min, im_max = box
    corners = np.array([
        complex(re_min, im_min), complex(re_max, im_min), complex(re_max, im_max), complex(re_min, im_max),
    ])
    s = np.linspace(0.0, 1.0, panels + 1)
    starts = (corners[:, None] + s[None, :-1] * (np.roll(corners, -1) - corners)[:, None]).ravel()
    ends = (corners[:, None] + s[None, 1:] * (np.roll(corners, -1) - corners)[:, None]).ravel()
    half = 0.5 * (ends - starts)
    z = (0.5 * (starts + ends))[:, None] + half[:, None] * nodes[None, :]
    w = half[:, None] * weights[None, :]
    g = log_derivative(z)
    if not np.all(np.isfinite(g)):
        return complex("nan"), complex("nan")
    scale = 2j * math.pi
    return complex(np.sum(w * g) / scale), complex(np.sum(w * z * g) / scale)


def _diameter(box: Box) -> float:
    return math.hypot(box[1] - box[0], box[3] - box[2])


def _inside(k: complex, box: Box) -> bool:
    return box[0] <= k.real <= box[1] and box[2] <= k.imag <= box[3]


class _Search:
    """One subdivision run over a window; boxes at the same depth are processed in parallel."""

    def __init__(self, det: _Determinant, window: SearchWindow, threads: int):
        self.det = det
        self.window = window
        self.threads = threads

    def winding(self, box: Box) -> Tuple[int, float]:
        return _track_phase(self.det, _box_path(box), self.det.derivative, self.window.winding_tol)

    def outer(self) -> Tuple[Box, int, float]:
        eps = self.window.jitter_amplitude
        box = self.window.box
        for attempt in range(settings.JITTER_ATTEMPTS + 1):
            try:
                w, scale = self.winding(box)
                return box, w, scale
            except (BoundaryZeroError, WindingResolutionError) as e:
                if attempt == settings.JITTER_ATTEMPTS:
                    raise BoundaryZeroError(
                        f"Window boundary still hits a zero after {attempt} jitter attempts."
                    ) from e
                logger.debug("Jittering window corners by %.3e (%s)", eps, e)
                re_min, re_max, im_min, im_max = self.window.box
                box = (re_min - eps, re_max + eps, im_min - eps, im_max + eps)
                eps *= 2.0
        raise AssertionError("unreachable")

    def split(self, box: Box, winding: int) -> List[Tuple[Box, int, float]]:
        re_min, re_max, im_min, im_max = box
        centre = complex(0.5 * (re_min + re_max), 0.5 * (im_min + im_max))
        # a cut must clear the rounding ring of an m-fold zero, about eps^{1/m} wide
        eps = max(
            self.window.jitter_amplitude * _diameter(box) / self.window.size,
            10.0 * np.finfo(float).eps ** (1.0 / max(winding, 1)) * (1.0 + abs(centre)),
        )
        max_shift = 0.2 * min(re_max - re_min, im_max - im_min)
        shift = 0.0
        for attempt in range(settings.JITTER_ATTEMPTS + 1):
            re_mid = centre.real + shift
            im_mid = centre.imag + shift
            children = [
                (re_min, re_mid, im_min, im_mid),
                (re_mid, re_max, im_min, im_mid),
                (re_min, re_mid, im_mid, im_max),
                (re_mid, re_max, im_mid, im_max),
            ]
            try:
                results = [(child,) + self.winding(child) for child in children]
                if sum(r[1] for r in results) == winding:
                    return results
                logger.debug("Children windings do not add up to %d; moving the split", winding)
            except (BoundaryZeroError, WindingResolutionError) as e:
                logger.debug("Split of %s retried: %s", box, e)
            shift = min(eps * 2.0 ** attempt, max_shift)
        raise BoundaryZeroError(f"Could not split box {box} without a zero on a cut.")

    def cluster_centre(self, box: Box, winding: int) -> Optional[complex]:
        """Mean of the zeros in the box from the contour moments; None when the quadrature is not resolved."""
        for panels in MOMENT_PANELS:
            count, total = contour_moments(self.det.log_derivative, box, panels)
            if np.isfinite(count) and abs(count - winding) <= MOMENT_TOL * winding:
                centre = total / winding
                return centre if _inside(centre, box) else None
        return None

    def newton(self, start: complex, box: Box, winding: int) -> Tuple[Optional[complex], float]:
        """Modified Newton; returns the iterate with the smallest |det| and the last step size."""
        k = start
        best, best_value = None, math.inf
        # below this size the steps of an m-fold root are rounding noise
        noise = 1e3 * np.finfo(float).eps ** (1.0 / winding)
        last = math.inf
        for _ in range(settings.NEWTON_MAX_ITER):
            value = float(abs(self.det(np.array([k]))[0]))
            if value < best_value:
                best, best_value = k, value
            try:
                step = self.det.newton_step(k, winding)
            except SingularGammaError:
                return k, 0.0
            if not np.isfinite(step):
                break
            k = k - step
            if not _inside(k, box):
                break
            size = abs(step)
            scale_k = 1.0 + abs(k)
            if size <= settings.POLISH_TOL * scale_k or (size > 0.5 * last and size <= noise * scale_k):
                value = float(abs(self.det(np.array([k]))[0]))
                return (k, size) if value <= best_value else (best, size)
            last = size
        return best, (0.0 if math.isinf(last) else last)

    def confirm(self, k: complex, winding: int, last: float, box: Box) -> bool:
        """The m zeros of the box lie on a small circle around k."""
        radius = max(
            10.0 * settings.POLISH_TOL * (1.0 + abs(k)),
            10.0 * last,
            100.0 * np.finfo(float).eps ** (1.0 / winding) * (1.0 + abs(k)),
        )
        limit = 0.5 * _diameter(box)
        while radius <= limit:
            try:
                m = winding_on_circle(self.det, self.det.derivative, k, radius, self.window.winding_tol)
            except (BoundaryZeroError, WindingResolutionError):
                m = -1
            if m == winding:
                return True
            if m > winding:
                return False
            radius *= 10.0
        return False

    def polish(self, box: Box, winding: int, scale: float) -> Optional[RootRecord]:
        """
        Modified Newton from the mean of the enclosed zeros, then a multiplicity check on a
        circle. None when the zeros of the box are not one cluster and it must be split.
        """
        centre = self.cluster_centre(box, winding)
        start = centre if centre is not None else complex(0.5 * (box[0] + box[1]), 0.5 * (box[2] + box[3]))
        k, last = self.newton(start, box, winding)
        if k is None:
            if centre is None:
                return None
            k, last = centre, 0.0
        if not self.confirm(k, winding, last, box):
            logger.debug("No %d-fold cluster around %s; splitting", winding, k)
            return None
        residual = float(abs(self.det(np.array([k]))[0]))
        if residual > settings.ROOT_TOL * (1.0 + scale):
            logger.debug("Residual %.3e too large at %s", residual, k)
            return None
        return RootRecord(k=k, multiplicity=winding, residual=residual, box=box)

    def process(self, item: Tuple[Box, int, float, int]) -> Tuple[List[RootRecord], List[Tuple[Box, int, float, int]], List[Box]]:
        box, winding, scale, depth = item
        if winding == 0:
            return [], [], []
        if winding <= settings.MAX_MULTIPLICITY and _diameter(box) <= settings.COARSE_TOL:
            root = self.polish(box, winding, scale)
            if root is not None:
                return [root], [], []
        if depth >= self.window.max_depth:
            return [], [], [box]
        children = self.split(box, winding)
        return [], [(child, w, s, depth + 1) for child, w, s in children], []

    def run(self) -> Tuple[List[RootRecord], int]:
        box, total, scale = self.outer()
        logger.debug("Window %s encloses %d zeros", box, total)
        level = [(box, total, scale, 0)]
        roots: List[RootRecord] = []
        unresolved: List[Box] = []
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            while level:
                next_level = []
                for found, children, stuck in pool.map(self.process, level):
                    roots.extend(found)
                    next_level.extend(children)
                    unresolved.extend(stuck)
                level = next_level
        if unresolved:
            raise DepthExhaustedError(
                f"{len(unresolved)} boxes unresolved at depth {self.window.max_depth}; "
                f"{len(roots)} roots were isolated.",
                unresolved,
            )
        return roots, total


def _thread_count(threads: Optional[int]) -> int:
    threads = settings.THREADS if threads is None else threads
    return threads if threads > 0 else (os.cpu_count() or 1)


def find_zeros(
    alpha: StrengthTuple,
    config: CenterConfiguration,
    window: SearchWindow,
    threads: Optional[int] = None,
) -> List[RootRecord]:
    """
    All zeros of det Γ for the reduced tuple inside the window, with multiplicities.
    Infinite strengths are removed first; the empty tuple has no zeros.
    """
    reduced, sub = reduce(alpha, config)
    if reduced.n == 0:
        return []
    det = _Determinant(reduced.values(), sub.distances)
    roots, total = _Search(det, window, _thread_count(threads)).run()
    found = sum(r.multiplicity for r in roots)
    if found != total:
        raise WindingResolutionError(
            f"The window winding is {total} but the isolated roots account for {found}."
        )
    return sorted(roots, key=lambda r: (r.k.real, r.k.imag))


def resonances(
    alpha: StrengthTuple,
    config: CenterConfiguration,
    window: SearchWindow,
    threads: Optional[int] = None,
) -> List[RootRecord]:
    """Zeros in the closed lower half-plane; |Im k| within polish tolerance is reported as real."""
    result = []
    for root in find_zeros(alpha, config, window, threads):
        tol = settings.POLISH_TOL * (1.0 + abs(root.k)) * 10.0
        if abs(root.k.imag) <= tol:
            result.append(root.model_copy(update={"k": complex(root.k.real, 0.0)}))
        elif root.k.imag < 0.0:
            result.append(root)
    return result


def multiplicity_at(
    alpha: StrengthTuple,
    config: CenterConfiguration,
    k: complex,
    radius: Optional[float] = None,
) -> int:
    """Number of zeros, with multiplicity, inside a small circle around k."""
    reduced, sub = reduce(alpha, config)
    if reduced.n == 0:
        return 0
    det = _Determinant(reduced.values(), sub.distances)
    radius = 1e-4 * (1.0 + abs(k)) if radius is None else radius
    return winding_on_circle(det, det.derivative, k, radius)
