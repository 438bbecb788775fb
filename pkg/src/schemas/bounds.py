from typing import List, Optional

from pydantic import BaseModel, ConfigDict, model_validator

from schemas.exppoly import StripBounds


class EnvelopeEntry(BaseModel):
    """Signed distances of one zero to the strip curves, in Im-units."""
    model_config = ConfigDict(frozen=True)

    k: complex
    multiplicity: int
    upper_margin: Optional[float] = None
    lower_margin: Optional[float] = None
    uniform_margin: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "k": {"re": self.k.real, "im": self.k.imag},
            "mult": self.multiplicity,
            "upper_margin": self.upper_margin,
            "lower_margin": self.lower_margin,
            "uniform_margin": self.uniform_margin,
        }


class EnvelopeReport(BaseModel):
    """
    Resonance-free region check for one tuple: every zero must satisfy
    upper_margin ≤ 0, lower_margin ≥ 0 and (dissipative tuples, Re k > 0) uniform_margin ≥ 0.
    """
    model_config = ConfigDict(frozen=True)

    digest: str
    n: int
    bounds: Optional[StripBounds] = None
    entries: List[EnvelopeEntry]
    violations: List[str]
    note: Optional[str] = None

    @model_validator(mode="after")
    def _check_bounds(self) -> "EnvelopeReport":
        if self.bounds is None and self.n > 1:
            raise ValueError("Strip constants are required for N > 1.")
        return self

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "digest": self.digest,
            "n": self.n,
            "constants": self.bounds.model_dump() if self.bounds else None,
            "entries": [e.to_json() for e in self.entries],
            "violations": self.violations,
            "passed": self.passed,
            "note": self.note,
        }
