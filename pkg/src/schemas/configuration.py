import cmath
import math
from functools import lru_cache
from typing import Any, Iterable, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_serializer, model_validator

from core.config import settings
from core.exceptions import ConfigurationError, UnreducedTupleError

Point = Tuple[float, float, float]


class ExtendedComplex(BaseModel):
    """
    A point of the extended complex plane: a finite complex number or ∞.
    Accepts the wire forms {"re": r, "im": i}, "inf" and plain numbers.
    """
    model_config = ConfigDict(frozen=True)

    re: float = 0.0
    im: float = 0.0
    infinite: bool = False

    @model_validator(mode="before")
    @classmethod
    def _parse_wire_form(cls, data: Any) -> Any:
        if isinstance(data, ExtendedComplex):
            return data
        if isinstance(data, str):
            if data.strip().lower() in ("inf", "infinity", "∞"):
                return {"infinite": True}
            data = complex(data.replace(" ", ""))
        if isinstance(data, (int, float, complex, np.number)):
            z = complex(data)
            if cmath.isinf(z):
                return {"infinite": True}
            return {"re": z.real, "im": z.imag}
        return data

    @model_validator(mode="after")
    def _check_variant(self) -> "ExtendedComplex":
        if self.infinite and (self.re != 0.0 or self.im != 0.0):
            raise ValueError("An infinite value carries no finite part.")
        if not self.infinite and not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError("Finite values must have finite real and imaginary parts.")
        return self

    @model_serializer(mode="plain")
    def _serialize(self) -> Union[str, dict]:
        if self.infinite:
            return "inf"
        return {"re": self.re, "im": self.im}

    @classmethod
    def of(cls, value: complex) -> "ExtendedComplex":
        return cls.model_validate(value)

    @classmethod
    def infinity(cls) -> "ExtendedComplex":
        return cls(infinite=True)

    @property
    def value(self) -> complex:
        if self.infinite:
            raise UnreducedTupleError("∞ has no finite value.")
        return complex(self.re, self.im)

    def conjugate(self) -> "ExtendedComplex":
        if self.infinite:
            return self
        return ExtendedComplex(re=self.re, im=-self.im)

    def __str__(self) -> str:
        return "inf" if self.infinite else str(self.value)


INFINITY = ExtendedComplex.infinity()


@lru_cache(maxsize=256)
def _distance_matrix(points: Tuple[Point, ...]) -> np.ndarray:
    coords = np.asarray(points, dtype=float).reshape(-1, 3)
    diff = coords[:, None, :] - coords[None, :, :]
    distances = np.sqrt(np.sum(diff * diff, axis=-1))
    distances.setflags(write=False)
    return distances


class CenterConfiguration(BaseModel):
    """N distinct centers in R³ with their cached pairwise distances."""
    model_config = ConfigDict(frozen=True)

    points: Tuple[Point, ...] = Field(default_factory=tuple)

    @field_validator("points")
    @classmethod
    def _check_distinct(cls, points: Tuple[Point, ...]) -> Tuple[Point, ...]:
        for p in points:
            if not all(math.isfinite(c) for c in p):
                raise ValueError("Center coordinates must be finite.")
        if len(points) < 2:
            return points
        distances = _distance_matrix(points)
        off = distances[~np.eye(len(points), dtype=bool)]
        if off.min() <= settings.DISTINCTNESS_TOL * off.max():
            raise ValueError("Centers must be pairwise distinct.")
        return points

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def distances(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 0))
        return _distance_matrix(self.points)

    @property
    def diameter(self) -> float:
        if self.n < 2:
            return 0.0
        return float(self.distances.max())

    def subset(self, indices: Iterable[int]) -> "CenterConfiguration":
        return CenterConfiguration(points=tuple(self.points[i] for i in indices))


FeasibleClass = Literal["real", "dissipative", "general"]


class StrengthTuple(BaseModel):
    """The N strength parameters α_j, each finite or ∞."""
    model_config = ConfigDict(frozen=True)

    entries: Tuple[ExtendedComplex, ...] = Field(default_factory=tuple)

    @classmethod
    def from_values(cls, values: Iterable[Any]) -> "StrengthTuple":
        return cls(entries=tuple(ExtendedComplex.model_validate(v) for v in values))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def infinity_pattern(self) -> Tuple[int, ...]:
        return tuple(j for j, a in enumerate(self.entries) if a.infinite)

    @property
    def finite_indices(self) -> Tuple[int, ...]:
        return tuple(j for j, a in enumerate(self.entries) if not a.infinite)

    @property
    def n_finite(self) -> int:
        return len(self.finite_indices)

    @property
    def is_reduced(self) -> bool:
        return not self.infinity_pattern

    @property
    def is_real(self) -> bool:
        return all(a.infinite or a.im == 0.0 for a in self.entries)

    @property
    def is_dissipative(self) -> bool:
        return all(a.infinite or a.im <= 0.0 for a in self.entries)

    @property
    def feasible_class(self) -> FeasibleClass:
        if self.is_real:
            return "real"
        if self.is_dissipative:
            return "dissipative"
        return "general"

    def values(self) -> np.ndarray:
        """Finite entries as a complex array; fails on any ∞ entry."""
        if not self.is_reduced:
            raise UnreducedTupleError(
                f"Strength tuple has infinite entries at {list(self.infinity_pattern)}; reduce it first."
            )
        return np.array([a.value for a in self.entries], dtype=complex)

    def conjugate(self) -> "StrengthTuple":
        return StrengthTuple(entries=tuple(a.conjugate() for a in self.entries))

    def replace(self, index: int, value: Any) -> "StrengthTuple":
        entries = list(self.entries)
        entries[index] = ExtendedComplex.model_validate(value)
        return StrengthTuple(entries=tuple(entries))

    def __str__(self) -> str:
        return "(" + ", ".join(str(a) for a in self.entries) + ")"


class ConfigurationFile(BaseModel):
    """
    The JSON input contract:
    {"centers": [[x, y, z], ...], "alpha": [{"re": r, "im": i} | "inf", ...]}
    """
    centers: List[Tuple[float, float, float]]
    alpha: List[ExtendedComplex]

    @model_validator(mode="after")
    def _check_lengths(self) -> "ConfigurationFile":
        if len(self.centers) != len(self.alpha):
            raise ValueError(
                f"'centers' has {len(self.centers)} entries but 'alpha' has {len(self.alpha)}."
            )
        if not self.centers:
            raise ValueError("At least one center is required.")
        return self

    def to_domain(self) -> Tuple[StrengthTuple, CenterConfiguration]:
        try:
            config = CenterConfiguration(points=tuple(tuple(c) for c in self.centers))
        except ValueError as e:
            raise ConfigurationError(str(e)) from e
        return StrengthTuple(entries=tuple(self.alpha)), config

    @classmethod
    def from_domain(cls, alpha: StrengthTuple, config: CenterConfiguration) -> "ConfigurationFile":
        return cls(centers=[list(p) for p in config.points], alpha=list(alpha.entries))


def optional_values(alpha: StrengthTuple) -> List[Optional[complex]]:
    """Entries as complex numbers with None standing for ∞ (output formatting only)."""
    return [None if a.infinite else a.value for a in alpha.entries]
