"""Run reports, deterministic JSON emission, and standalone SVG plots.

Reports are flat JSON documents with a version tag (``"schema": 1``).
Floats are always serialized with 17 significant digits so that identical
inputs produce byte-identical files; the wall-time field sits on its own
line and is the only part allowed to differ between reruns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

__all__ = ["Metric", "RunReport", "dumps_json", "dump_json", "emit_plot"]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Metric:
    """One checked quantity.  With a bound present, passed == (value <= bound)."""

    name: str
    value: float
    bound: float | None
    passed: bool

    def __post_init__(self):
        if self.bound is not None and self.passed != (self.value <= self.bound):
            raise ValueError(
                f"metric {self.name!r}: passed flag inconsistent with value/bound"
            )

    @classmethod
    def le(cls, name: str, value: float, bound: float) -> "Metric":
        return cls(name, float(value), float(bound), float(value) <= float(bound))

    @classmethod
    def flag(cls, name: str, ok: bool, value: float = 0.0) -> "Metric":
        return cls(name, float(value), None, bool(ok))


@dataclass
class RunReport:
    """Result of one CLI experiment, ready for JSON emission."""

    command: str
    params: dict
    metrics: list[Metric] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    seed: int | None = None
    wall_time_s: float = 0.0
    extra: dict = field(default_factory=dict)  # merged at top level, non-overriding

    @property
    def all_passed(self) -> bool:
        return all(m.passed for m in self.metrics)

    def check_le(self, name: str, value: float, bound: float) -> None:
        self.metrics.append(Metric.le(name, value, bound))

    def check_flag(self, name: str, ok: bool, value: float = 0.0) -> None:
        self.metrics.append(Metric.flag(name, ok, value))

    def to_json_dict(self, include_wall_time: bool = True) -> dict:
        base = {
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "params": self.params,
            "metrics": [
                {"name": m.name, "value": m.value, "bound": m.bound, "passed": m.passed}
                for m in self.metrics
            ],
            "artifacts": list(self.artifacts),
            "seed": self.seed,
            "all_passed": self.all_passed,
        }
        for k, v in self.extra.items():
            if k not in base:
                base[k] = v
        if include_wall_time:
            base["wall_time_s"] = self.wall_time_s
        return base


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return f"{x:.17g}"


def _emit(obj, out: list[str], indent: int) -> None:
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_format_float(obj))
    elif isinstance(obj, str):
        escaped = (
            obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        )
        out.append(f'"{escaped}"')
    elif isinstance(obj, Mapping):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for pos, (k, v) in enumerate(items):
            out.append(f'{pad}  "{k}": ')
            _emit(v, out, indent + 1)
            out.append(",\n" if pos < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for pos, v in enumerate(obj):
            out.append(pad + "  ")
            _emit(v, out, indent + 1)
            out.append(",\n" if pos < len(obj) - 1 else "\n")
        out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps_json(obj) -> str:
    """Deterministic JSON text: 17-significant-digit floats, 2-space indent."""
    out: list[str] = []
    _emit(obj, out, 0)
    out.append("\n")
    return "".join(out)


def dump_json(obj, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_json(obj))


# -- SVG plots ----------------------------------------------------------------

_PALETTE = ("#1f6fb2", "#c23b22", "#2a9d5c", "#8e5eb8", "#c98a14", "#3c3c3c")

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _f(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min(s for s in (1 * mag, 2 * mag, 5 * mag, 10 * mag) if s >= raw)
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12 * step:
        out.append(t)
        t += step
    return out or [lo]


def emit_plot(
    series,
    path,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> None:
    """Write a standalone SVG line/scatter plot; bytes depend only on input.

    ``series`` is either a mapping from label to point sequence or a bare
    point sequence; points are (x, y) pairs.  Empty input is an error.
    """
    if isinstance(series, Mapping):
        named = [(str(k), list(v)) for k, v in series.items()]
    else:
        named = [("series", list(series))]
    named = [(k, v) for k, v in named if v]
    if not named:
        raise ValueError("nothing to plot")
    xs = [p[0] for _, pts in named for p in pts]
    ys = [p[1] for _, pts in named for p in pts]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    if xhi == xlo:
        xhi = xlo + 1.0
    if yhi == ylo:
        yhi = ylo + 1.0
    yspan = yhi - ylo
    ylo -= 0.05 * yspan
    yhi += 0.05 * yspan

    def sx(x: float) -> float:
        return _ML + (x - xlo) / (xhi - xlo) * (_W - _ML - _MR)

    def sy(y: float) -> float:
        return _H - _MB - (y - ylo) / (yhi - ylo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" '
            f'font-family="monospace" font-size="16">{title}</text>'
        )
    # axes
    parts.append(
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" '
        f'stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" '
        f'stroke="black" stroke-width="1"/>'
    )
    for t in _ticks(xlo, xhi):
        x = sx(t)
        parts.append(
            f'<line x1="{_f(x)}" y1="{_H - _MB}" x2="{_f(x)}" y2="{_H - _MB + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_f(x)}" y="{_H - _MB + 20}" text-anchor="middle" '
            f'font-family="monospace" font-size="11">{_f(t)}</text>'
        )
    for t in _ticks(ylo, yhi):
        y = sy(t)
        parts.append(
            f'<line x1="{_ML - 5}" y1="{_f(y)}" x2="{_ML}" y2="{_f(y)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{_f(y + 4)}" text-anchor="end" '
            f'font-family="monospace" font-size="11">{_f(t)}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 12}" text-anchor="middle" '
            f'font-family="monospace" font-size="13">{xlabel}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="16" y="{(_MT + _H - _MB) / 2:.1f}" text-anchor="middle" '
            f'font-family="monospace" font-size="13" '
            f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.1f})">{ylabel}</text>'
        )
    for idx, (label, pts) in enumerate(named):
        color = _PALETTE[idx % len(_PALETTE)]
        coords = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in pts)
        if len(pts) > 1:
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        if len(pts) <= 64:
            for x, y in pts:
                parts.append(
                    f'<circle cx="{_f(sx(x))}" cy="{_f(sy(y))}" r="2.5" fill="{color}"/>'
                )
        parts.append(
            f'<text x="{_W - _MR - 8}" y="{_MT + 16 + 16 * idx}" text-anchor="end" '
            f'font-family="monospace" font-size="12" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(parts) + "\n")
