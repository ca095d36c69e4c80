"""Truncated path signatures of piecewise-linear paths.

A signature coefficient is indexed by a word over the alphabet {1..d}; the
level-k block holds the k-fold iterated integrals. Coefficients are stored
flat, level by level (constant term first, then level 1, ..., level M),
row-major within a level so that the first letter of a word is the slowest
index. This layout is part of the checkpoint and metric contracts.

Two code paths compute the same quantity:

* generic word-indexed routines (`segment_signature`, `chen_concat`,
  `path_signature`) valid for any dimension, used by the test suite;
* a vectorized engine for batches of scalar series embedded by the
  lead-lag transform (`leadlag_signature_batch`), which exploits the fact
  that every lead-lag increment moves along a single coordinate. The
  engine also provides the exact adjoint used during GAN training.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ShapeError, SizeError


@dataclass
class Path:
    """Ordered points of a d-dimensional piecewise-linear path."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ShapeError(f"path points must be (n, d), got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise SizeError("a path needs at least one point")
        self.points = pts

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


def sig_length(dim: int, degree: int) -> int:
    """Number of coefficients through level ``degree``, constant included."""
    if dim == 1:
        return degree + 1
    return (dim ** (degree + 1) - 1) // (dim - 1)


def level_offsets(dim: int, degree: int) -> list[int]:
    """Flat start offset of each level 0..degree (plus the end sentinel)."""
    offsets = [0]
    for k in range(degree + 1):
        offsets.append(offsets[-1] + dim**k)
    return offsets


@dataclass
class SignatureVector:
    """Flat truncated-signature coefficients of a d-dimensional path."""

    dim: int
    degree: int
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=np.float64)
        expected = sig_length(self.dim, self.degree)
        if coeffs.shape != (expected,):
            raise ShapeError(
                f"expected {expected} coefficients for dim {self.dim}, "
                f"degree {self.degree}; got shape {coeffs.shape}"
            )
        self.coefficients = coeffs

    def level(self, k: int) -> np.ndarray:
        """Level-k block as a flat array of length dim**k."""
        offs = level_offsets(self.dim, self.degree)
        return self.coefficients[offs[k] : offs[k + 1]]

    def coefficient(self, word: tuple[int, ...]) -> float:
        """Coefficient of a word given as a tuple of letters in 1..d."""
        if any(not 1 <= c <= self.dim for c in word):
            raise ShapeError(f"word {word} has letters outside 1..{self.dim}")
        idx = 0
        for letter in word:
            idx = idx * self.dim + (letter - 1)
        return float(self.level(len(word))[idx])


def _trivial_levels(dim: int, degree: int) -> list[np.ndarray]:
    return [np.ones(1)] + [np.zeros(dim**k) for k in range(1, degree + 1)]


def _levels_to_vector(dim, degree, levels) -> SignatureVector:
    return SignatureVector(dim, degree, np.concatenate(levels))


def _vector_to_levels(sig: SignatureVector) -> list[np.ndarray]:
    return [sig.level(k).copy() for k in range(sig.degree + 1)]


def lead_lag(series) -> Path:
    """Embed a scalar series into the plane via the lead-lag transform.

    The lead coordinate jumps to the next value first, then the lag
    coordinate catches up, producing 2n-1 vertices. Coordinates are
    ordered (lead, lag). The quadratic variation of the series becomes
    visible to the level-2 signature terms of this path.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("lead_lag expects a one-dimensional series")
    n = x.shape[0]
    if n < 2:
        raise SizeError(f"lead_lag needs >= 2 points, got {n}")
    pts = np.empty((2 * n - 1, 2))
    pts[0] = (x[0], x[0])
    pts[1::2, 0] = x[1:]  # lead advances
    pts[1::2, 1] = x[:-1]
    pts[2::2, 0] = x[1:]  # lag catches up
    pts[2::2, 1] = x[1:]
    return Path(pts)


def segment_signature(increment, degree: int) -> SignatureVector:
    """Signature of a single linear segment: the truncated tensor exponential.

    Level k equals increment^(tensor k) / k!.
    """
    inc = np.asarray(increment, dtype=np.float64)
    if inc.ndim != 1:
        raise ShapeError("increment must be a vector")
    if degree < 1:
        raise ShapeError(f"degree must be >= 1, got {degree}")
    levels = [np.ones(1)]
    for k in range(1, degree + 1):
        levels.append(np.kron(levels[-1], inc) / k)
    return _levels_to_vector(inc.shape[0], degree, levels)


def chen_concat(s1: SignatureVector, s2: SignatureVector) -> SignatureVector:
    """Signature of the concatenated path: truncated tensor product.

    The coefficient of a word w in the result is the sum over all splits
    w = uv of s1(u) * s2(v).
    """
    if s1.dim != s2.dim or s1.degree != s2.degree:
        raise ShapeError(
            f"signature mismatch: dim {s1.dim}/{s2.dim}, "
            f"degree {s1.degree}/{s2.degree}"
        )
    a = _vector_to_levels(s1)
    b = _vector_to_levels(s2)
    out = []
    for k in range(s1.degree + 1):
        acc = np.zeros(s1.dim**k)
        for i in range(k + 1):
            acc += np.kron(a[i], b[k - i])
        out.append(acc)
    return _levels_to_vector(s1.dim, s1.degree, out)


def path_signature(path: Path | np.ndarray, degree: int) -> SignatureVector:
    """Truncated signature of a piecewise-linear path.

    Left fold of Chen concatenation over the segment signatures of the
    consecutive increments. A single-point path has the trivial signature.
    """
    pts = path.points if isinstance(path, Path) else Path(path).points
    dim = pts.shape[1]
    if pts.shape[0] < 2:
        return _levels_to_vector(dim, degree, _trivial_levels(dim, degree))
    sig = segment_signature(pts[1] - pts[0], degree)
    for idx in range(2, pts.shape[0]):
        sig = chen_concat(sig, segment_signature(pts[idx] - pts[idx - 1], degree))
    return sig


def cumulative_signature(series, degree: int) -> SignatureVector:
    """Signature of the lead-lag embedding of the running sum of a series."""
    x = np.asarray(series, dtype=np.float64)
    return path_signature(lead_lag(np.cumsum(x)), degree)


def expected_signature(sample) -> SignatureVector:
    """Coefficient-wise mean over a sample of equally shaped signatures."""
    sigs = list(sample)
    if not sigs:
        raise SizeError("expected_signature needs a nonempty sample")
    dim, degree = sigs[0].dim, sigs[0].degree
    for s in sigs[1:]:
        if s.dim != dim or s.degree != degree:
            raise ShapeError("signatures in the sample must share dim and degree")
    stacked = np.stack([s.coefficients for s in sigs])
    return SignatureVector(dim, degree, stacked.mean(axis=0))


# ---------------------------------------------------------------------------
# Batched lead-lag signature engine (dimension 2, single-coordinate steps)
# ---------------------------------------------------------------------------
#
# Every increment of a lead-lag path moves along exactly one coordinate, so
# its tensor exponential is supported on the single word c^r. One Chen step
# with such a segment therefore reads, for each word w ending in r copies of
# letter c:
#
#     new[w] = sum_{r=0..run_c(w)} prev[w with trailing c^r removed] * a^r / r!
#
# which is a handful of gather-multiply-adds per level. The tables below
# enumerate, per (letter, run length, level), the destination words and
# their truncated sources.


@lru_cache(maxsize=None)
def _run_tables(degree: int):
    """For d = 2: tables[c][r-1] = (dst, src) flat coefficient indices.

    ``dst`` lists every word (across all levels) ending in at least r copies
    of letter c+1; ``src`` is the corresponding word with that run of length
    r removed. Indices address the flat level-major coefficient vector.
    """
    offs = level_offsets(2, degree)
    tables = {}
    for c in (0, 1):  # letter index; letter value is c + 1
        per_run = []
        for r in range(1, degree + 1):
            suffix = 0
            for _ in range(r):
                suffix = suffix * 2 + c
            dst_parts, src_parts = [], []
            for k in range(r, degree + 1):
                src_level = np.arange(2 ** (k - r))
                dst_parts.append(offs[k] + src_level * (2**r) + suffix)
                src_parts.append(offs[k - r] + src_level)
            per_run.append(
                (np.concatenate(dst_parts), np.concatenate(src_parts))
            )
        tables[c] = per_run
    return tables


def _leadlag_increments(x: np.ndarray):
    """Increment magnitudes of the lead-lag path of each series in a batch.

    For series values x[., 0..n-1] the path increments alternate between the
    lead coordinate and the lag coordinate, both with magnitude
    x[., k+1] - x[., k]. Returns (steps, coords): steps is (B, 2(n-1)),
    coords is the per-step coordinate index pattern (length 2(n-1)).
    """
    diffs = np.diff(x, axis=1)
    b, m = diffs.shape
    steps = np.repeat(diffs, 2, axis=1)
    coords = np.tile(np.array([0, 1]), m)
    return steps, coords


def leadlag_signature_batch(series: np.ndarray, degree: int = 5) -> np.ndarray:
    """Truncated signatures of the lead-lag embedding of each series.

    ``series`` is (B, n) or (n,); the result is (B, L) or (L,) flat
    coefficients with L = 2^(degree+1) - 1, matching `path_signature` of
    `lead_lag` exactly.
    """
    sig, _ = _leadlag_forward(series, degree)
    return sig


def _leadlag_forward(series: np.ndarray, degree: int):
    x = np.asarray(series, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[np.newaxis, :]
    if x.ndim != 2:
        raise ShapeError(f"series batch must be (B, n), got shape {x.shape}")
    if x.shape[1] < 2:
        raise SizeError(f"lead_lag needs >= 2 points, got {x.shape[1]}")

    b = x.shape[0]
    steps, coords = _leadlag_increments(x)
    tables = _run_tables(degree)
    n_steps = steps.shape[1]
    length = sig_length(2, degree)

    sig_flat = np.zeros((b, length))
    sig_flat[:, 0] = 1.0
    snapshots = np.empty((n_steps, b, length))
    for t in range(n_steps):
        snapshots[t] = sig_flat
        prev = snapshots[t]
        a = steps[:, t]
        coef = a[:, None]
        per_run = tables[coords[t]]
        for r in range(1, degree + 1):
            dst, src = per_run[r - 1]
            sig_flat[:, dst] += prev[:, src] * coef
            coef = coef * a[:, None] / (r + 1)
    cache = (x.shape, steps, coords, snapshots, degree)
    if single:
        return sig_flat[0], cache
    return sig_flat, cache


def _leadlag_vjp(cache, grad_out: np.ndarray) -> np.ndarray:
    """Exact adjoint of `_leadlag_forward` with respect to the input series."""
    (bshape, steps, coords, snapshots, degree) = cache
    g = np.asarray(grad_out, dtype=np.float64)
    single = g.ndim == 1
    if single:
        g = g[np.newaxis, :]
    b = steps.shape[0]
    tables = _run_tables(degree)
    grad_sig = g.copy()
    grad_steps = np.zeros_like(steps)

    for t in range(steps.shape[1] - 1, -1, -1):
        prev = snapshots[t]
        a = steps[:, t]
        per_run = tables[coords[t]]
        grad_prev = grad_sig.copy()
        ga = np.zeros(b)
        coef = a[:, None]  # a^r / r!
        dcoef = np.ones((b, 1))  # d(a^r / r!)/da = a^(r-1) / (r-1)!
        for r in range(1, degree + 1):
            dst, src = per_run[r - 1]
            gd = grad_sig[:, dst]
            ga += (gd * prev[:, src] * dcoef).sum(axis=1)
            grad_prev[:, src] += gd * coef
            dcoef = coef
            coef = coef * a[:, None] / (r + 1)
        grad_steps[:, t] = ga
        grad_sig = grad_prev

    # steps repeat each series difference twice (lead move, then lag move)
    grad_diffs = grad_steps[:, 0::2] + grad_steps[:, 1::2]
    grad_x = np.zeros(bshape)
    grad_x[:, 1:] += grad_diffs
    grad_x[:, :-1] -= grad_diffs
    if single:
        return grad_x[0]
    return grad_x
