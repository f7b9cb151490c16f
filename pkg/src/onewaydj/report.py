"""Structured run reports and their on-disk layout."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

GRID_FORMAT = "%.12f"


def clean(value: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, floats rounded to 12 digits, -0.0 to 0.0."""
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not np.isfinite(v):
            return str(v)
        return round(v, 12) + 0.0
    if isinstance(value, Path):
        return str(value)
    return value


def grid_text(matrix: np.ndarray) -> str:
    """Whitespace-separated numeric grid, one matrix row per line."""
    buf = io.StringIO()
    np.savetxt(buf, np.round(np.asarray(matrix, dtype=float), 12) + 0.0, fmt=GRID_FORMAT)
    return buf.getvalue()


def density_artifacts(prefix: str, matrix: np.ndarray) -> dict[str, str]:
    m = np.asarray(matrix, dtype=complex)
    return {f"{prefix}_real.txt": grid_text(m.real), f"{prefix}_imag.txt": grid_text(m.imag)}


def read_density_grids(prefix: Union[str, Path]) -> np.ndarray:
    """Inverse of ``density_artifacts``: load ``<prefix>_real.txt`` and ``<prefix>_imag.txt``."""
    prefix = str(prefix)
    try:
        re = np.loadtxt(prefix + "_real.txt", ndmin=2)
        im = np.loadtxt(prefix + "_imag.txt", ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read density grids {prefix}_{{real,imag}}.txt: {exc}") from exc
    if re.shape != im.shape:
        raise ValueError(f"{prefix}: real and imaginary grids differ in shape")
    return re + 1j * im


@dataclass
class Report:
    mode: str
    config: dict
    results: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    exit_code: int = 0
    artifacts: dict = field(default_factory=dict)  # file name -> text

    def to_dict(self) -> dict:
        return clean(
            {
                "mode": self.mode,
                "config": self.config,
                "results": self.results,
                "metrics": self.metrics,
                "warnings": self.warnings,
                "exit_code": self.exit_code,
                "files": sorted(self.artifacts) + ["report.json"],
            }
        )

    def render(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def emit_report(report: Report, directory: Union[str, Path]) -> list[Path]:
    """Write every artifact and ``report.json`` into ``directory``; return the paths written."""
    directory = Path(directory)
    written = []
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for name in sorted(report.artifacts):
            path = directory / name
            path.write_text(report.artifacts[name])
            written.append(path)
        path = directory / "report.json"
        path.write_text(report.render())
        written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write report to {exc.filename or directory}: {exc.strerror or exc}") from exc
    return written
