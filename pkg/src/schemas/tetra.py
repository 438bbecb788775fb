from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

NminBranch = Literal["nmin2", "nmin4"]


class TetraOptimum(BaseModel):
    """
    Minimal-decay resonance of the regular tetrahedron at one frequency.
    On nmin2 bands any tuple with two entries equal to alpha_star is optimal;
    `alpha` then holds the representative (a⋆, a⋆, ∞, ∞).
    """
    model_config = ConfigDict(frozen=True)

    f: float
    edge: float = Field(gt=0.0)
    branch: NminBranch
    r: float = Field(ge=0.0)
    alpha_star: float
    alpha: Tuple[Optional[float], ...]

    @property
    def k(self) -> complex:
        return complex(self.f, -self.r)

    @property
    def nmin(self) -> int:
        return 2 if self.branch == "nmin2" else 4

    def to_json(self) -> dict:
        return {
            "f": self.f,
            "L": self.edge,
            "branch": self.branch,
            "nmin": self.nmin,
            "r_min": self.r,
            "alpha_star": self.alpha_star,
            "alpha": ["inf" if a is None else a for a in self.alpha],
            "k": {"re": self.k.real, "im": self.k.imag},
        }
