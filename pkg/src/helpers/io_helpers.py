import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import yaml
from pydantic import ValidationError

from core.exceptions import ConfigurationError
from schemas.configuration import CenterConfiguration, ConfigurationFile, StrengthTuple

logger = logging.getLogger(__name__)

Cell = Union[None, str, int, float]


class InputError(ConfigurationError):
    """Unreadable or malformed input file; the message carries the position."""


def _parse_text(text: str, source: str) -> Any:
    if source.endswith((".yaml", ".yml")):
        try:
            return yaml.safe_load(text)
        except yaml.MarkedYAMLError as e:
            mark = e.problem_mark
            raise InputError(f"{source}:{mark.line + 1}:{mark.column + 1}: {e.problem}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from e


def _validation_message(source: str, error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "<root>"
        parts.append(f"{location}: {item['msg']}")
    return f"{source}: " + "; ".join(parts)


def parse_configuration(text: str, source: str = "<input>") -> ConfigurationFile:
    data = _parse_text(text, source)
    try:
        return ConfigurationFile.model_validate(data)
    except ValidationError as e:
        raise InputError(_validation_message(source, e)) from e


def load_configuration(path: Union[str, Path]) -> Tuple[StrengthTuple, CenterConfiguration]:
    """Reads {"centers": ..., "alpha": ...} from JSON (or YAML by extension)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from e
    parsed = parse_configuration(text, str(path))
    alpha, config = parsed.to_domain()
    logger.debug("Loaded %d centers from %s", config.n, path)
    return alpha, config


def parse_complex(text: str) -> complex:
    """'re,im' or a Python complex literal such as '0.5-0.14j'."""
    text = text.strip().replace(" ", "")
    try:
        if "," in text:
            re, im = text.split(",")
            return complex(float(re), float(im))
        return complex(text)
    except ValueError as e:
        raise InputError(f"Cannot read a complex number from {text!r}.") from e


def parse_range(text: str) -> Tuple[float, float]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError as e:
        raise InputError(f"A range needs two comma-separated numbers, got {text!r}.") from e
    if not lo < hi:
        raise InputError(f"Range {text!r} must be increasing.")
    return lo, hi


def format_number(x: Optional[float]) -> str:
    """17 significant digits; blank for None and nan."""
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def _cell(value: Cell) -> str:
    if value is None or isinstance(value, str):
        return value or ""
    return format_number(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Cell]], footer: Sequence[str] = ()) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    for line in footer:
        buffer.write(f"# {line}\n")
    return buffer.getvalue()


def alpha_cells(values: Sequence[Optional[complex]]) -> List[Cell]:
    """Real strengths as one number, complex ones as 're+imj', ∞ as a blank cell."""
    cells: List[Cell] = []
    for a in values:
        if a is None:
            cells.append(None)
        elif a.imag == 0.0:
            cells.append(a.real)
        else:
            cells.append(f"{format_number(a.real)}{'+' if a.imag >= 0 else '-'}{format_number(abs(a.imag))}j")
    return cells


def render_json(payload: Any) -> str:
    return json.dumps(payload, indent=2) + "\n"


def write_output(text: str, output: Optional[Union[str, Path]]) -> None:
    if output is None or str(output) == "-":
        sys.stdout.write(text)
        return
    Path(output).write_text(text, encoding="utf-8")
    logger.info("Wrote %s", output)
