import math
from typing import List, Tuple

import numpy as np

from core.exceptions import ConfigurationError
from schemas.configuration import CenterConfiguration, ExtendedComplex, StrengthTuple


def check_lengths(alpha: StrengthTuple, config: CenterConfiguration) -> None:
    if alpha.n != config.n:
        raise ConfigurationError(
            f"Strength tuple has {alpha.n} entries but the configuration has {config.n} centers."
        )


def reduce(alpha: StrengthTuple, config: CenterConfiguration) -> Tuple[StrengthTuple, CenterConfiguration]:
    """
    Removes every infinite strength together with its center.
    Survivors keep their order; n(α) is the length of the result.
    """
    check_lengths(alpha, config)
    keep = alpha.finite_indices
    if len(keep) == alpha.n:
        return alpha, config
    return (
        StrengthTuple(entries=tuple(alpha.entries[j] for j in keep)),
        config.subset(keep),
    )


def chordal_distance(a: ExtendedComplex, b: ExtendedComplex) -> float:
    """Euclidean distance between the stereographic images of a and b on the unit sphere."""
    if a.infinite and b.infinite:
        return 0.0
    if a.infinite or b.infinite:
        z = b.value if a.infinite else a.value
        return 2.0 / math.sqrt(1.0 + abs(z) ** 2)
    za, zb = a.value, b.value
    return 2.0 * abs(za - zb) / math.sqrt((1.0 + abs(za) ** 2) * (1.0 + abs(zb) ** 2))


def tuple_distance(alpha: StrengthTuple, other: StrengthTuple) -> float:
    """ℓ² combination of the sphere distances of the components."""
    if alpha.n != other.n:
        raise ConfigurationError("Tuples of different lengths have no distance.")
    return math.sqrt(sum(chordal_distance(a, b) ** 2 for a, b in zip(alpha.entries, other.entries)))


def diameter(config: CenterConfiguration) -> float:
    return config.diameter


def is_equidistant(config: CenterConfiguration, rel_tol: float = 1e-10) -> bool:
    if config.n < 2:
        return False
    off = config.distances[~np.eye(config.n, dtype=bool)]
    return bool(off.max() - off.min() <= rel_tol * off.max())


def unachievable_frequency_candidates(config: CenterConfiguration, f_max: float, rel_tol: float = 1e-9) -> List[float]:
    """
    Positive frequencies f ≤ f_max with f·|y_j − y_j'|/π a nonzero integer for every pair.
    Only these can be missing from the achievable set over real tuples (N ≥ 2); the
    set is mirrored for negative f.
    """
    if config.n < 2:
        return []
    iu = np.triu_indices(config.n, k=1)
    pair_distances = config.distances[iu]
    d0 = float(pair_distances.min())
    candidates = []
    l = 1
    while math.pi * l / d0 <= f_max * (1.0 + rel_tol):
        f = math.pi * l / d0
        ratios = f * pair_distances / math.pi
        if np.all(np.abs(ratios - np.round(ratios)) <= rel_tol * np.maximum(ratios, 1.0)):
            candidates.append(f)
        l += 1
    return candidates
