import logging
from typing import Optional

from core.config import settings

_CONFIGURED = False


def configure_logging(level: Optional[str] = None) -> None:
    """Installs one stream handler on the root logger. Safe to call twice."""
    global _CONFIGURED
    root = logging.getLogger()
    root.setLevel((level or settings.LOG_LEVEL).upper())
    if _CONFIGURED:
        return
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    _CONFIGURED = True
