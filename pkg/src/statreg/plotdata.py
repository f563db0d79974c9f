"""Plot data (not plots) for each covariance method.

Each record is written as ``<kind>.csv`` with ``x,y`` columns; the metadata
of all records goes to ``plot_metadata.json``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autocov import KernelSpec, empirical_autocov, tapered_sequence
from .cov_methods import default_ar_max_order, levinson_durbin
from .ols_core import CovPlugin, OlsFit

PLOT_KINDS = ("acf", "pacf", "risk_curve", "spectral_density", "selected_acf")
NO_PLOT = "No plot available"


@dataclass(frozen=True)
class PlotData:
    kind: str
    x: np.ndarray
    y: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}")
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-D with equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def acf_band(n: int) -> float:
    return 1.96 / math.sqrt(n)


def sample_acf(residuals, max_lag: int) -> np.ndarray:
    g = empirical_autocov(residuals, max_lag).gamma
    return g / g[0]


def sample_pacf(residuals, max_lag: int) -> np.ndarray:
    """Partial autocorrelations at lags 1..max_lag."""
    g = empirical_autocov(residuals, max_lag).gamma
    return levinson_durbin(g, max_lag).reflection[1:]


def _acf_record(kind, residuals, max_lag, meta):
    n = len(residuals)
    lags = np.arange(max_lag + 1)
    return PlotData(kind, lags, sample_acf(residuals, max_lag), {**meta, "band": acf_band(n)})


def plot_data_for(fit: OlsFit, cov: CovPlugin) -> list[PlotData]:
    """Records for ``cov.method_tag``; an empty list means no plot exists."""
    e = fit.residuals
    n = fit.n
    method = cov.method_tag
    sel = cov.selected_param
    meta = {"method": method, "selected": _jsonable(sel), "n": n}
    lag_max = max(1, min(default_ar_max_order(n), n - 1))
    diag = cov.diagnostics or {}

    if method == "fitAR":
        return [
            _acf_record("acf", e, lag_max, meta),
            PlotData(
                "pacf",
                np.arange(1, lag_max + 1),
                sample_pacf(e, lag_max),
                {**meta, "band": acf_band(n)},
            ),
        ]
    if method == "kernel":
        out = [_acf_record("acf", e, max(lag_max, int(sel)), meta)]
        if "risk" in diag:
            risk = np.asarray(diag["risk"])
            out.append(PlotData("risk_curve", np.arange(risk.size), risk, meta))
            acv = empirical_autocov(e, int(sel))
            spec = diag.get("kernel") or KernelSpec("triangle", int(sel) + 1)
            tap = tapered_sequence(acv, spec).gamma
            out.append(
                PlotData("selected_acf", np.arange(tap.size), tap / acv.gamma[0], meta)
            )
        return out
    if method == "spectralproj":
        proj = diag["projection"]
        edges, dens = proj.density()
        return [
            PlotData(
                "spectral_density", edges, dens, {**meta, "step": "post", "x_max": math.pi}
            )
        ]
    if method in ("select", "efromovich"):
        top = max(sel) if method == "select" else int(sel)
        return [_acf_record("selected_acf", e, max(top, 1), meta)]
    return []


def _jsonable(v):
    if v is None:
        return None
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def write_plot_data(directory, records: list[PlotData]) -> list[Path]:
    """Write each record to ``<kind>.csv`` and the metadata index; returns the CSV paths."""
    if not records:
        return []
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for rec in records:
        path = d / f"{rec.kind}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y"])
            w.writerows((repr(float(a)), repr(float(b))) for a, b in zip(rec.x, rec.y))
        paths.append(path)
    meta = {rec.kind: rec.metadata for rec in records}
    (d / "plot_metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return paths
