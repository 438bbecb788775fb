import hashlib
import json
import logging
from typing import List, Optional

from core.config import settings
from core.exceptions import ExpansionUnavailableError
from schemas.bounds import EnvelopeEntry, EnvelopeReport
from schemas.configuration import CenterConfiguration, ConfigurationFile, StrengthTuple
from schemas.roots import SearchWindow
from services import exppoly_service, rootfinder_service

logger = logging.getLogger(__name__)

# Zeros are located to about this accuracy relative to 1 + |k|.
MARGIN_SLACK = 1e-8


def configuration_digest(alpha: StrengthTuple, config: CenterConfiguration) -> str:
    payload = ConfigurationFile.from_domain(alpha, config).model_dump(mode="json")
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def check_envelope(
    alpha: StrengthTuple,
    config: CenterConfiguration,
    window: SearchWindow,
    threads: Optional[int] = None,
) -> EnvelopeReport:
    """Finds the zeros in the window and measures them against the strip and uniform curves."""
    alpha.values()
    if alpha.n > settings.MAX_EXPANSION_N:
        raise ExpansionUnavailableError("Strip constants need the exponential-polynomial expansion (N ≤ 8).")
    digest = configuration_digest(alpha, config)
    roots = rootfinder_service.find_zeros(alpha, config, window, threads)
    if alpha.n == 1:
        return EnvelopeReport(
            digest=digest,
            n=1,
            entries=[EnvelopeEntry(k=r.k, multiplicity=r.multiplicity) for r in roots],
            violations=[],
            note="Single center: no strip; the only zero is k = −4πiα₁.",
        )
    _, bounds = exppoly_service.bounds_for(alpha, config)
    uniform_applies = alpha.is_dissipative
    entries: List[EnvelopeEntry] = []
    violations: List[str] = []
    for root in roots:
        k = root.k
        slack = MARGIN_SLACK * (1.0 + abs(k))
        upper = float(k.imag - bounds.upper(k.real))
        lower = float(k.imag - bounds.lower(k.real))
        uniform = None
        if uniform_applies and k.real > 0.0:
            envelope = exppoly_service.uniform_envelope(config.n, config.diameter, k.real, bounds.uniform_offset)
            uniform = float(-k.imag - envelope)
        entries.append(EnvelopeEntry(
            k=k, multiplicity=root.multiplicity, upper_margin=upper, lower_margin=lower, uniform_margin=uniform,
        ))
        if upper > slack:
            violations.append(f"k={k}: above the upper strip curve by {upper:.3e}")
        if lower < -slack:
            violations.append(f"k={k}: below the lower strip curve by {-lower:.3e}")
        if uniform is not None and uniform < -slack:
            violations.append(f"k={k}: decay below the uniform envelope by {-uniform:.3e}")
    if violations:
        logger.warning("Envelope check %s found %d violations", digest, len(violations))
    return EnvelopeReport(digest=digest, n=alpha.n, bounds=bounds, entries=entries, violations=violations)
