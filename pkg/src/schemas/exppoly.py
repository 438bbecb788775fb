from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator


class ExpTerm(BaseModel):
    """One summand p_l(z)·e^{izq_l}; coefficients in ascending powers of z."""
    model_config = ConfigDict(frozen=True)

    q: float = Field(ge=0.0)
    coeffs: Tuple[complex, ...]

    @field_serializer("coeffs")
    def _serialize_coeffs(self, coeffs: Tuple[complex, ...]) -> List[List[float]]:
        return [[c.real, c.imag] for c in coeffs]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=complex)


class ExponentialPolynomial(BaseModel):
    """
    D(z) = Σ_l p_l(z)·e^{izq_l} = (−4π)^N·det Γ_{α,Y}(z) for one numeric tuple.
    Delays are strictly increasing and start at 0.
    """
    model_config = ConfigDict(frozen=True)

    terms: Tuple[ExpTerm, ...]
    n: int = Field(ge=1)
    diameter: float = Field(ge=0.0)

    @model_validator(mode="after")
    def _check_delays(self) -> "ExponentialPolynomial":
        delays = [t.q for t in self.terms]
        if not delays or delays[0] != 0.0:
            raise ValueError("The first delay must be 0.")
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise ValueError("Delays must be strictly increasing.")
        return self

    @property
    def nu(self) -> int:
        return len(self.terms) - 1

    @property
    def delays(self) -> np.ndarray:
        return np.array([t.q for t in self.terms])

    @property
    def q_max(self) -> float:
        return self.terms[-1].q

    @property
    def q_second(self) -> float:
        return self.terms[-2].q if self.nu >= 1 else 0.0

    def to_json(self) -> dict:
        return {"terms": [t.model_dump() for t in self.terms]}


class StripBounds(BaseModel):
    """
    Logarithmic strip holding every zero k of one determinant:
    −c21·ln(|Re k|+1) − c22 ≤ Im k ≤ −c11·ln(|Re k|+1) + c12.
    The uniform pair (slope, c1) bounds the whole dissipative class on the same centers.
    """
    model_config = ConfigDict(frozen=True)

    c11: float = Field(gt=0.0)
    c12: float
    c21: float = Field(gt=0.0)
    c22: float
    uniform_slope: float = Field(gt=0.0)
    uniform_offset: float

    def upper(self, re_k) -> np.ndarray:
        return -self.c11 * np.log(np.abs(re_k) + 1.0) + self.c12

    def lower(self, re_k) -> np.ndarray:
        return -self.c21 * np.log(np.abs(re_k) + 1.0) - self.c22

    def contains(self, k: complex, slack: float = 0.0) -> bool:
        return bool(self.lower(k.real) - slack <= k.imag <= self.upper(k.real) + slack)
