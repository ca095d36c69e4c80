"""Distribution metrics for scoring synthetic returns against real ones.

The report covers three families over 1/5/20/100-day horizons:

* earth mover's distance between the empirical distributions of k-day
  cumulative returns;
* RMSE between expected truncated signatures of lead-lag-embedded windows
  of the k-day aggregated series;
* a leverage-effect score comparing the correlation profiles between
  returns and future squared returns.

Raw values are stored as computed; the conventional display multiplies
them by 100.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ShapeError, SizeError
from .preprocess import WindowSpec, windows
from .signature import leadlag_signature_batch, sig_length

HORIZONS = (1, 5, 20, 100)

# Each signature window covers this many aggregated observations, so the
# lead-lag path length is identical across horizons.
SIG_WINDOW_POINTS = 20

REPORT_LABELS = (
    "EMD(1)",
    "EMD(5)",
    "EMD(20)",
    "EMD(100)",
    "Sig-RMSE(1)",
    "Sig-RMSE(5)",
    "Sig-RMSE(20)",
    "Sig-RMSE(100)",
    "Leverage Effect",
)


def k_day_aggregate(returns, k: int) -> np.ndarray:
    """Overlapping k-day cumulative returns (rolling sums, stride 1)."""
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 1:
        raise ShapeError("k_day_aggregate expects a one-dimensional series")
    if k < 1:
        raise SizeError(f"aggregation horizon must be >= 1, got {k}")
    if k > r.shape[0]:
        raise SizeError(f"horizon {k} exceeds series length {r.shape[0]}")
    if k == 1:
        return r.copy()
    csum = np.concatenate([[0.0], np.cumsum(r)])
    return csum[k:] - csum[:-k]


def emd_1d(xs, ys) -> float:
    """Earth mover's (Wasserstein-1) distance between 1-D samples.

    Equal sizes reduce to the mean absolute gap between order statistics;
    unequal sizes use the exact piecewise integral of |F_x - F_y| over the
    merged support.
    """
    x = np.sort(np.asarray(xs, dtype=np.float64))
    y = np.sort(np.asarray(ys, dtype=np.float64))
    if x.size == 0 or y.size == 0:
        raise SizeError("emd_1d needs nonempty samples")
    if x.size == y.size:
        return float(np.mean(np.abs(x - y)))
    support = np.concatenate([x, y])
    support.sort(kind="mergesort")
    zs = support[:-1]
    widths = np.diff(support)
    fx = np.searchsorted(x, zs, side="right") / x.size
    fy = np.searchsorted(y, zs, side="right") / y.size
    return float(np.sum(np.abs(fx - fy) * widths))


def expected_leadlag_signature(window_values: np.ndarray, degree: int = 5) -> np.ndarray:
    """Mean flat signature over a (num_windows, length) window stack."""
    return leadlag_signature_batch(np.asarray(window_values, dtype=np.float64), degree).mean(
        axis=0
    )


def sig_rmse(real_windows, fake_windows, k: int = 1, degree: int = 5) -> float:
    """RMSE between expected signatures of k-day aggregated window sets.

    Each window is aggregated to its k-day cumulative returns (so windows
    must be longer than k), lead-lag embedded, and signed to ``degree``;
    the two sample means are compared coefficient-wise.
    """
    real = np.atleast_2d(np.asarray(real_windows, dtype=np.float64))
    fake = np.atleast_2d(np.asarray(fake_windows, dtype=np.float64))
    if real.shape[0] == 0 or fake.shape[0] == 0:
        raise SizeError("sig_rmse needs nonempty window sets")
    for name, arr in (("real", real), ("fake", fake)):
        if arr.shape[1] < k + 1:
            raise SizeError(
                f"{name} windows of length {arr.shape[1]} are too short for "
                f"horizon {k} (need >= {k + 1})"
            )
    agg_real = np.stack([k_day_aggregate(w, k) for w in real])
    agg_fake = np.stack([k_day_aggregate(w, k) for w in fake])
    mean_real = expected_leadlag_signature(agg_real, degree)
    mean_fake = expected_leadlag_signature(agg_fake, degree)
    return float(np.sqrt(np.mean((mean_real - mean_fake) ** 2)))


def leverage_profile(returns, tau_max: int = 10) -> np.ndarray:
    """Correlation of returns with future squared returns, lags 1..tau_max."""
    r = np.asarray(returns, dtype=np.float64)
    if r.shape[0] < tau_max + 30:
        raise SizeError(
            f"leverage profile needs at least tau_max + 30 = {tau_max + 30} "
            f"returns, got {r.shape[0]}"
        )
    out = np.empty(tau_max)
    squared = r * r
    for tau in range(1, tau_max + 1):
        a = r[:-tau]
        b = squared[tau:]
        sa = a.std()
        sb = b.std()
        if sa == 0.0 or sb == 0.0:
            raise DegenerateInputError("leverage profile undefined for constant series")
        out[tau - 1] = np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb)
    return out


def leverage_effect_score(real_returns, fake_returns, tau_max: int = 10) -> float:
    """Root-mean-square gap between the two leverage profiles."""
    real = leverage_profile(real_returns, tau_max)
    fake = leverage_profile(fake_returns, tau_max)
    return float(np.sqrt(np.mean((real - fake) ** 2)))


@dataclass
class MetricsReport:
    """Raw metric values keyed by display label; table scaling is x100."""

    values: dict[str, float]

    def __post_init__(self):
        for label in REPORT_LABELS:
            if label not in self.values:
                raise ShapeError(f"report is missing metric {label!r}")

    def display_value(self, label: str) -> float:
        return self.values[label] * 100.0

    def to_csv_text(self) -> str:
        lines = ["metric,raw,display_x100"]
        for label in REPORT_LABELS:
            raw = self.values[label]
            lines.append(f"{label},{raw!r},{raw * 100.0!r}")
        return "\n".join(lines) + "\n"

    def to_table_text(self) -> str:
        width = max(len(label) for label in REPORT_LABELS)
        lines = [f"{'metric'.ljust(width)}  {'raw':>14}  {'x100':>14}"]
        for label in REPORT_LABELS:
            raw = self.values[label]
            lines.append(f"{label.ljust(width)}  {raw:14.6g}  {raw * 100.0:14.6g}")
        return "\n".join(lines) + "\n"


def build_report(real_returns, fake_returns, degree: int = 5) -> MetricsReport:
    """All nine metrics for a pair of return series.

    For each horizon k both series are aggregated to k-day cumulative
    returns; EMD compares those samples directly, while Sig-RMSE compares
    expected signatures over sliding windows of the aggregated series
    (window length fixed at SIG_WINDOW_POINTS aggregated observations).
    Identical inputs with identical windowing give exact zeros.
    """
    real = np.asarray(real_returns, dtype=np.float64)
    fake = np.asarray(fake_returns, dtype=np.float64)
    needed = max(HORIZONS) + SIG_WINDOW_POINTS - 1
    for name, arr in (("real", real), ("fake", fake)):
        if arr.shape[0] < needed:
            raise SizeError(
                f"{name} series of length {arr.shape[0]} is too short for the "
                f"report (need >= {needed})"
            )
    values: dict[str, float] = {}
    for k in HORIZONS:
        agg_real = k_day_aggregate(real, k)
        agg_fake = k_day_aggregate(fake, k)
        values[f"EMD({k})"] = emd_1d(agg_real, agg_fake)
        spec = WindowSpec(SIG_WINDOW_POINTS, 1)
        sig_real = expected_leadlag_signature(windows(agg_real, spec), degree)
        sig_fake = expected_leadlag_signature(windows(agg_fake, spec), degree)
        values[f"Sig-RMSE({k})"] = float(np.sqrt(np.mean((sig_real - sig_fake) ** 2)))
    values["Leverage Effect"] = leverage_effect_score(real, fake)
    return MetricsReport(values)
