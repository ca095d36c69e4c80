"""Synthetic financial time-series generation toolkit.

Pipeline: closing prices -> gaussianized return windows -> visibility-graph
encoded GAN training with truncated-signature losses -> generated windows
mapped back to log returns -> distribution metrics against the real data.
Classical GARCH(1,1) and geometric-Brownian-motion baselines are included
for comparison.
"""

__version__ = "0.1.0"

from .baselines import GarchParams, GbmParams, garch_fit, garch_simulate, gbm_fit, gbm_simulate
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .metrics import MetricsReport, build_report, emd_1d, k_day_aggregate, leverage_effect_score, sig_rmse
from .preprocess import (
    LambertParams,
    PriceSeries,
    ReturnSeries,
    WindowSpec,
    degaussianize,
    fit_delta,
    gaussianize,
    lambert_w0,
    load_price_csv,
    log_returns,
    normalize,
    windows,
)
from .siggan import SigGanConfig, SigGraphGan, generate, sig_kld_loss, sig_mse_loss, train
from .signature import (
    Path,
    SignatureVector,
    chen_concat,
    cumulative_signature,
    expected_signature,
    lead_lag,
    leadlag_signature_batch,
    path_signature,
    segment_signature,
    sig_length,
)
from .visibility import VisibilityGraph, brute_force_visibility, degree_sequence, natural_visibility

__all__ = [
    "__version__",
    "Checkpoint",
    "GarchParams",
    "GbmParams",
    "LambertParams",
    "MetricsReport",
    "Path",
    "PriceSeries",
    "ReturnSeries",
    "SigGanConfig",
    "SigGraphGan",
    "SignatureVector",
    "VisibilityGraph",
    "WindowSpec",
    "brute_force_visibility",
    "build_report",
    "chen_concat",
    "cumulative_signature",
    "degaussianize",
    "degree_sequence",
    "emd_1d",
    "expected_signature",
    "fit_delta",
    "garch_fit",
    "garch_simulate",
    "gaussianize",
    "gbm_fit",
    "gbm_simulate",
    "generate",
    "k_day_aggregate",
    "lambert_w0",
    "lead_lag",
    "leadlag_signature_batch",
    "leverage_effect_score",
    "load_checkpoint",
    "load_price_csv",
    "log_returns",
    "natural_visibility",
    "normalize",
    "path_signature",
    "save_checkpoint",
    "segment_signature",
    "sig_kld_loss",
    "sig_length",
    "sig_mse_loss",
    "sig_rmse",
    "train",
    "windows",
]
