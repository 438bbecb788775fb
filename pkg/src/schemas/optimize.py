import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from schemas.configuration import StrengthTuple, optional_values

CertificateMode = Literal["ray", "line"]
PointSource = Literal["sampled", "refined", "oracle"]
SamplingClass = Literal["real", "dissipative"]


def _complex_json(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


class OptimalityCertificate(BaseModel):
    """
    First minors m_j = ∂_{β_j}D_a(b; k) at a resonance together with the best ray
    (or line) e^{iξ}·R through them.
    """
    model_config = ConfigDict(frozen=True)

    minors: Tuple[complex, ...]
    xi: float = Field(ge=-math.pi, lt=math.pi)
    residual: float = Field(ge=0.0)
    verdicts: Tuple[bool, ...]
    mode: CertificateMode
    tol: float = Field(gt=0.0)
    vanishing: Tuple[int, ...] = ()
    dissipative_minor_violations: Tuple[int, ...] = ()

    @model_validator(mode="after")
    def _check_verdicts(self) -> "OptimalityCertificate":
        if len(self.verdicts) != len(self.minors):
            raise ValueError("One sign verdict per minor is required.")
        if self.mode == "line" and not all(self.verdicts):
            raise ValueError("Line certificates carry no sign condition.")
        return self

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol and all(self.verdicts)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "xi": self.xi,
            "residual": self.residual,
            "tol": self.tol,
            "passed": self.passed,
            "minors": [_complex_json(m) for m in self.minors],
            "verdicts": list(self.verdicts),
            "vanishing": list(self.vanishing),
            "dissipative_minor_violations": list(self.dissipative_minor_violations),
        }


class ParetoPoint(BaseModel):
    """An achieved resonance k = f − ir with the tuple that achieves it."""
    model_config = ConfigDict(frozen=True)

    f: float
    r: float = Field(ge=0.0)
    alpha: StrengthTuple
    k: complex
    multiplicity: int = Field(default=1, ge=1)
    source: PointSource
    certificate: Optional[OptimalityCertificate] = None

    @model_validator(mode="after")
    def _check_k(self) -> "ParetoPoint":
        if abs(self.k - complex(self.f, -self.r)) > 1e-12 * (1.0 + abs(self.k)):
            raise ValueError("k must equal f − i·r.")
        return self

    def alpha_columns(self) -> List[Optional[complex]]:
        return optional_values(self.alpha)

    def to_json(self) -> dict:
        return {
            "f": self.f,
            "r": self.r,
            "alpha": [a.model_dump() for a in self.alpha.entries],
            "k": _complex_json(self.k),
            "mult": self.multiplicity,
            "source": self.source,
            "certificate": self.certificate.to_json() if self.certificate else None,
        }


class PersistenceResult(BaseModel):
    """Worst |D_a(β; k)| relative to the minor scale after re-drawing one strength."""
    model_config = ConfigDict(frozen=True)

    index: int
    minor: float
    worst: float
    passed: bool


class WidthPoint(BaseModel):
    """A resonance in energy/width coordinates: E = Re k², ε = 2|Im k²|."""
    model_config = ConfigDict(frozen=True)

    energy: float
    width: float = Field(ge=0.0)
    alpha: StrengthTuple
    k: complex
    source: PointSource
