import math
from pathlib import Path
from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.config import settings
from schemas.optimize import CertificateMode, SamplingClass
from schemas.roots import SearchWindow

Command = Literal["solve", "frontier", "certify", "refine", "tetra-check", "bounds", "expand"]
OutputFormat = Literal["json", "csv"]


class RunConfig(BaseModel):
    """One command-line invocation after parsing; overrides `settings` for this run only."""
    model_config = ConfigDict(frozen=True)

    command: Command
    input: Optional[Path] = None
    output: Optional[Path] = None
    format: OutputFormat = "json"
    window: Optional[SearchWindow] = None
    grid: int = Field(default=100, ge=1)
    budget: int = Field(default=10_000, ge=1)
    seed: int = Field(default_factory=lambda: settings.SEED)
    tol: float = Field(default_factory=lambda: settings.CERT_TOL, gt=0.0)
    threads: int = Field(default_factory=lambda: settings.THREADS, ge=0)

    f: Optional[float] = None
    f_range: Optional[Tuple[float, float]] = None
    r: Optional[float] = Field(default=None, ge=0.0)
    k: Optional[complex] = None
    hint: Optional[complex] = None
    mode: CertificateMode = "ray"
    sampling: SamplingClass = "real"
    refine: bool = False
    edge: float = Field(default=math.pi, gt=0.0)
    r_max: float = Field(default=4.0, gt=0.0)

    @model_validator(mode="after")
    def _check_inputs(self) -> "RunConfig":
        if self.command != "tetra-check" and self.input is None:
            raise ValueError(f"'{self.command}' needs --input.")
        if self.command == "refine" and self.f is None:
            raise ValueError("'refine' needs --f.")
        if self.f_range is not None and not self.f_range[0] < self.f_range[1]:
            raise ValueError("--f-range must be increasing.")
        return self

    @property
    def f_bins(self) -> Tuple[float, ...]:
        """Bin centers over f_range."""
        lo, hi = self.f_range or (0.0, 2.0)
        width = (hi - lo) / self.grid
        return tuple(lo + (i + 0.5) * width for i in range(self.grid))

    @property
    def bin_width(self) -> float:
        lo, hi = self.f_range or (0.0, 2.0)
        return (hi - lo) / self.grid
