from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.config import settings

Box = Tuple[float, float, float, float]


class SearchWindow(BaseModel):
    """A rectangle re_min ≤ Re k ≤ re_max, im_min ≤ Im k ≤ im_max plus solver knobs."""
    model_config = ConfigDict(frozen=True)

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    max_depth: int = Field(default_factory=lambda: settings.MAX_DEPTH, ge=1)
    jitter: Optional[float] = Field(default=None, gt=0.0)
    winding_tol: float = Field(default_factory=lambda: settings.WINDING_TOL, gt=0.0, lt=0.5)

    @model_validator(mode="after")
    def _check_rectangle(self) -> "SearchWindow":
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("Window needs re_min < re_max and im_min < im_max.")
        if self.jitter is not None and self.jitter > 1e-3 * self.size:
            raise ValueError("Jitter must not exceed 1e-3 of the window size.")
        return self

    @classmethod
    def parse(cls, text: str, **kwargs) -> "SearchWindow":
        """'re_min,re_max,im_min,im_max' as given on the command line."""
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 4:
            raise ValueError(f"Window needs four comma-separated numbers, got {text!r}.")
        re_min, re_max, im_min, im_max = (float(p) for p in parts)
        return cls(re_min=re_min, re_max=re_max, im_min=im_min, im_max=im_max, **kwargs)

    @property
    def box(self) -> Box:
        return (self.re_min, self.re_max, self.im_min, self.im_max)

    @property
    def size(self) -> float:
        return max(self.re_max - self.re_min, self.im_max - self.im_min)

    @property
    def jitter_amplitude(self) -> float:
        return self.jitter if self.jitter is not None else 1e-7 * self.size


class RootRecord(BaseModel):
    """A zero k of the determinant with its multiplicity and isolating box."""
    model_config = ConfigDict(frozen=True)

    k: complex
    multiplicity: int = Field(ge=1)
    residual: float = Field(ge=0.0)
    box: Box

    def to_json(self) -> dict:
        return {"re": self.k.real, "im": self.k.imag, "mult": self.multiplicity, "residual": self.residual}
