from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from core.exceptions import ConfigurationError
from schemas.configuration import CenterConfiguration, StrengthTuple


class GammaMatrix(BaseModel):
    """Γ_{α,Y}(z) for a reduced tuple, kept with the inputs that generated it."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha: StrengthTuple
    config: CenterConfiguration
    z: complex
    entries: np.ndarray

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


class BetaChart(BaseModel):
    """
    Local coordinates around a base tuple a ∈ C̄^N: β_j = α_j where a_j is finite and
    β_j = −1/α_j where a_j = ∞. The base point is b = (a_j finite, 0 at the ∞ slots).
    Indices keep the order of the configuration; nothing is permuted.
    """
    model_config = ConfigDict(frozen=True)

    base: StrengthTuple

    @property
    def size(self) -> int:
        return self.base.n

    @property
    def n(self) -> int:
        return self.base.n_finite

    @property
    def finite_indices(self) -> Tuple[int, ...]:
        return self.base.finite_indices

    @property
    def infinite_indices(self) -> Tuple[int, ...]:
        return self.base.infinity_pattern

    @property
    def infinite_mask(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        mask[list(self.infinite_indices)] = True
        return mask

    @property
    def base_point(self) -> np.ndarray:
        b = np.zeros(self.size, dtype=complex)
        for j in self.finite_indices:
            b[j] = self.base.entries[j].value
        return b

    def beta_of(self, alpha: StrengthTuple) -> np.ndarray:
        """Chart coordinates of a nearby tuple α."""
        if alpha.n != self.size:
            raise ConfigurationError("Tuple and chart have different lengths.")
        beta = np.zeros(self.size, dtype=complex)
        for j, a in enumerate(alpha.entries):
            if j in self.infinite_indices:
                if a.infinite:
                    continue
                if a.value == 0:
                    raise ConfigurationError(f"α_{j + 1} = 0 lies outside the chart around ∞.")
                beta[j] = -1.0 / a.value
            else:
                if a.infinite:
                    raise ConfigurationError(f"α_{j + 1} = ∞ lies outside the chart around a finite base value.")
                beta[j] = a.value
        return beta

    def check(self, config: CenterConfiguration) -> None:
        if config.n != self.size:
            raise ConfigurationError(
                f"Chart has {self.size} coordinates but the configuration has {config.n} centers."
            )
