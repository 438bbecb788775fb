from typing import Optional

from pydantic import BaseModel, Field

from schemas.configuration import ConfigurationFile
from schemas.optimize import CertificateMode
from schemas.roots import SearchWindow


class ComplexValue(BaseModel):
    re: float
    im: float = 0.0

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


class SolveRequest(ConfigurationFile):
    window: SearchWindow
    resonances_only: bool = True


class CertifyRequest(ConfigurationFile):
    k: ComplexValue
    mode: CertificateMode = "ray"
    tol: Optional[float] = Field(default=None, gt=0.0)


class EnvelopeRequest(ConfigurationFile):
    window: SearchWindow
