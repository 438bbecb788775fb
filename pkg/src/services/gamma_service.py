import logging
import math
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy import linalg

from core.config import settings
from core.exceptions import ConfigurationError, SingularGammaError
from schemas.configuration import CenterConfiguration, StrengthTuple
from schemas.gamma import BetaChart, GammaMatrix
from services.geometry_service import check_lengths

logger = logging.getLogger(__name__)

FOUR_PI = 4.0 * math.pi

ZArray = Union[complex, np.ndarray]


def green_kernel(z: complex, x: Sequence[float]) -> complex:
    """G_z(x) = e^{iz|x|}/(4π|x|)."""
    r = float(np.linalg.norm(np.asarray(x, dtype=float)))
    if r == 0.0:
        raise ConfigurationError("The Green kernel is singular at the origin.")
    return complex(np.exp(1j * z * r) / (FOUR_PI * r))


def green_matrix(distances: np.ndarray, z: ZArray) -> np.ndarray:
    """
    G̃_z on the configuration: G_z(y_j − y_j') off the diagonal and 0 on it.
    With an array of z values the result is stacked along a leading axis.
    """
    z = np.asarray(z, dtype=complex)
    n = distances.shape[0]
    off = ~np.eye(n, dtype=bool)
    safe = np.where(off, distances, 1.0)
    g = np.exp(1j * z[..., None, None] * safe) / (FOUR_PI * safe)
    return np.where(off, g, 0.0)


def gamma_entries(values: np.ndarray, distances: np.ndarray, z: ZArray) -> np.ndarray:
    """Raw Γ entries, (n, n) for scalar z and (M, n, n) for an array of z."""
    z = np.asarray(z, dtype=complex)
    n = values.shape[0]
    gamma = -green_matrix(distances, z)
    diag = values[None, :] - 1j * z.reshape(-1, 1) / FOUR_PI
    idx = np.arange(n)
    gamma = gamma.reshape((-1, n, n)).copy()
    gamma[:, idx, idx] = diag
    return gamma.reshape(z.shape + (n, n))


def gamma_derivative_entries(distances: np.ndarray, z: ZArray) -> np.ndarray:
    """∂_zΓ: −i/(4π) on the diagonal, −i|y_j − y_j'|·G_z(y_j − y_j') off it."""
    z = np.asarray(z, dtype=complex)
    n = distances.shape[0]
    d_gamma = -1j * distances * green_matrix(distances, z)
    d_gamma = d_gamma.reshape((-1, n, n)).copy()
    idx = np.arange(n)
    d_gamma[:, idx, idx] = -1j / FOUR_PI
    return d_gamma.reshape(z.shape + (n, n))


def build_gamma(alpha: StrengthTuple, config: CenterConfiguration, z: complex) -> GammaMatrix:
    check_lengths(alpha, config)
    values = alpha.values()
    return GammaMatrix(alpha=alpha, config=config, z=complex(z), entries=gamma_entries(values, config.distances, z))


def _lu_det(matrix: np.ndarray) -> complex:
    if matrix.shape[0] == 0:
        return 1.0 + 0.0j
    lu, piv = linalg.lu_factor(matrix, check_finite=False)
    sign = (-1) ** int(np.count_nonzero(piv != np.arange(matrix.shape[0])))
    return complex(sign * np.prod(np.diag(lu)))


def _log_condition(matrix: np.ndarray, z: complex) -> None:
    if matrix.shape[0] == 0 or not logger.isEnabledFor(logging.DEBUG):
        return
    cond = np.linalg.cond(matrix)
    if cond > settings.CONDITION_WARNING:
        logger.debug("Γ is ill-conditioned at z=%s (cond ≈ %.3e)", z, cond)


def det_gamma(alpha: StrengthTuple, config: CenterConfiguration, z: complex) -> complex:
    """det Γ_{α,Y}(z) through LU with partial pivoting; 1 for the empty tuple."""
    check_lengths(alpha, config)
    if alpha.n == 0:
        return 1.0 + 0.0j
    matrix = gamma_entries(alpha.values(), config.distances, z)
    _log_condition(matrix, z)
    return _lu_det(matrix)


def det_gamma_batch(values: np.ndarray, distances: np.ndarray, z: np.ndarray) -> np.ndarray:
    """det Γ for many z at once (stacked LU in numpy); used by the contour sampler."""
    z = np.asarray(z, dtype=complex)
    if values.shape[0] == 0:
        return np.ones(z.shape, dtype=complex)
    return np.linalg.det(gamma_entries(values, distances, z.ravel())).reshape(z.shape)


def dz_log_det_batch(values: np.ndarray, distances: np.ndarray, z: np.ndarray) -> np.ndarray:
    """trace(Γ⁻¹·∂_zΓ) for many z; entries where Γ is singular come back as nan."""
    z = np.asarray(z, dtype=complex).ravel()
    if values.shape[0] == 0:
        return np.zeros(z.shape, dtype=complex)
    gamma = gamma_entries(values, distances, z)
    d_gamma = gamma_derivative_entries(distances, z)
    try:
        return np.trace(np.linalg.solve(gamma, d_gamma), axis1=-2, axis2=-1)
    except np.linalg.LinAlgError:
        out = np.full(z.shape, np.nan + 0j)
        for i in range(z.shape[0]):
            try:
                out[i] = np.trace(np.linalg.solve(gamma[i], d_gamma[i]))
            except np.linalg.LinAlgError:
                pass
        return out


def dz_log_det_values(values: np.ndarray, distances: np.ndarray, z: complex) -> complex:
    if values.shape[0] == 0:
        return 0.0 + 0.0j
    gamma = gamma_entries(values, distances, z)
    d_gamma = gamma_derivative_entries(distances, z)
    lu, piv = linalg.lu_factor(gamma, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= np.finfo(float).eps * max(pivots.max(), 1.0):
        raise SingularGammaError(f"Γ is singular at z={z}.")
    return complex(np.trace(linalg.lu_solve((lu, piv), d_gamma, check_finite=False)))


def dz_log_det(alpha: StrengthTuple, config: CenterConfiguration, z: complex) -> complex:
    """(d/dz det Γ)/det Γ by Jacobi's formula."""
    check_lengths(alpha, config)
    return dz_log_det_values(alpha.values(), config.distances, z)


def hadamard_scale(values: np.ndarray, distances: np.ndarray, z: complex) -> float:
    """Product of the row norms of Γ(z); an upper bound for |det Γ(z)|."""
    if values.shape[0] == 0:
        return 1.0
    gamma = gamma_entries(values, distances, z)
    return float(np.prod(np.linalg.norm(gamma, axis=1)))


def residual_scale(values: np.ndarray, distances: np.ndarray, z: complex) -> float:
    """
    Π_j (|α_j| + |z|/4π + Σ_{j'≠j} |G_z(y_j − y_j')|): the size of the terms that cancel
    in det Γ(z). Unlike the row norms it does not shrink at a zero.
    """
    if values.shape[0] == 0:
        return 1.0
    off = np.abs(green_matrix(distances, z)).sum(axis=1)
    return float(np.prod(np.abs(values) + abs(z) / FOUR_PI + off))


def principal_minor(alpha: StrengthTuple, config: CenterConfiguration, z: complex, index: int) -> complex:
    """det Γ^{[index]}: Γ with row and column `index` removed."""
    check_lengths(alpha, config)
    keep = [j for j in range(alpha.n) if j != index]
    matrix = gamma_entries(alpha.values(), config.distances, z)[np.ix_(keep, keep)]
    return _lu_det(matrix)


# β-chart


def _chart_rows(chart: BetaChart, beta: np.ndarray, distances: np.ndarray, z: complex) -> np.ndarray:
    """
    The N×N block matrix whose determinant times (−1)^n is D_a(β; z).
    Rows at finite base entries: iz/(4π) − β_j on the diagonal, G_z off it.
    Rows at ∞ base entries: izβ_j/(4π) + 1 on the diagonal, β_j·G_z off it.
    """
    g = green_matrix(distances, z)
    inf = chart.infinite_mask
    diag = np.where(inf, 1j * z * beta / FOUR_PI + 1.0, 1j * z / FOUR_PI - beta)
    scale = np.where(inf, beta, 1.0)
    matrix = g * scale[:, None]
    matrix[np.diag_indices_from(matrix)] = diag
    return matrix


def _as_beta(chart: BetaChart, beta: Optional[Iterable[complex]]) -> np.ndarray:
    if beta is None:
        return chart.base_point
    beta = np.asarray(list(beta), dtype=complex)
    if beta.shape != (chart.size,):
        raise ConfigurationError(f"β must have {chart.size} coordinates, got {beta.shape[0]}.")
    return beta


def regularized_det(
    chart: BetaChart,
    beta: Optional[Iterable[complex]],
    config: CenterConfiguration,
    z: complex,
) -> complex:
    """
    D_a(β; z). At the base point (β_j = 0 on the ∞ slots) this equals det Γ of the
    reduced tuple, so its zeros and their multiplicities are the resonances of a.
    `beta=None` evaluates at the base point.
    """
    chart.check(config)
    beta = _as_beta(chart, beta)
    if chart.size == 0:
        return 1.0 + 0.0j
    matrix = _chart_rows(chart, beta, config.distances, z)
    return (-1) ** chart.n * _lu_det(matrix)


def _derivative_row(chart: BetaChart, config: CenterConfiguration, z: complex, index: int, corner: complex) -> np.ndarray:
    n_all = chart.size
    if index in chart.infinite_indices:
        row = green_matrix(config.distances, z)[index].copy()
        row[index] = corner
    else:
        row = np.zeros(n_all, dtype=complex)
        row[index] = -1.0
    return row


def first_minor(
    chart: BetaChart,
    beta: Optional[Iterable[complex]],
    config: CenterConfiguration,
    z: complex,
    index: int,
    corner: Optional[complex] = None,
) -> complex:
    """
    ∂_{β_index} D_a(β; z). D_a is affine in each β_j, so the derivative is the
    determinant with row `index` replaced by its β-derivative.

    At the base point this is the principal minor det Γ^{[index]} of the reduced
    matrix for a finite slot, and (−1)^n times the bordered (n+1)×(n+1) determinant
    for an ∞ slot. The bordered corner defaults to iz/(4π); at a zero of D_a the value
    does not depend on it. No (−4π) normalization is applied.
    """
    chart.check(config)
    if not 0 <= index < chart.size:
        raise ConfigurationError(f"Index {index} is out of range for {chart.size} coordinates.")
    beta = _as_beta(chart, beta)
    if corner is None:
        corner = 1j * z / FOUR_PI
    matrix = _chart_rows(chart, beta, config.distances, z)
    matrix[index] = _derivative_row(chart, config, z, index, corner)
    return (-1) ** chart.n * _lu_det(matrix)


def first_minors(
    chart: BetaChart,
    beta: Optional[Iterable[complex]],
    config: CenterConfiguration,
    z: complex,
) -> np.ndarray:
    return np.array([first_minor(chart, beta, config, z, i) for i in range(chart.size)], dtype=complex)


def bordered_minor_c_independence(
    chart: BetaChart,
    config: CenterConfiguration,
    z: complex,
    index: int,
    samples: int = 4,
    seed: int = 0,
) -> float:
    """
    Largest relative spread of the ∞-slot minor over random corner constants.
    Close to zero exactly when z is a zero of D_a at the base point.
    """
    if index not in chart.infinite_indices:
        raise ConfigurationError(f"Index {index} is not an ∞ slot of the chart.")
    rng = np.random.default_rng(seed)
    reference = first_minor(chart, None, config, z, index)
    corners = rng.normal(size=samples) + 1j * rng.normal(size=samples)
    spread = max(abs(first_minor(chart, None, config, z, index, corner=c) - reference) for c in corners)
    return spread / max(abs(reference), settings.MINOR_FLOOR)
