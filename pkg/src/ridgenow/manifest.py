"""Line-oriented key=value run manifests.

Every CLI run writes one of these next to its outputs; the recorded keys are
sufficient to reproduce the run exactly (full configuration, materialised
seed, preset versions).
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

from .errors import ParseError


def format_value(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def write_manifest(path: str | Path, entries: Mapping[str, object]) -> None:
    lines = [f"{key}={format_value(entries[key])}" for key in sorted(entries)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise ParseError(f"{path} line {i}: expected key=value")
        key, _, value = line.partition("=")
        out[key] = value
    return out
