"""Limit estimates for exponential rates of sequences.

For a sequence ``a_n`` that behaves like ``C n^-alpha r^(s n)`` (``s`` steps per
index) three estimates of ``r`` are tracked:

* root:  ``a_n^(1 / (s n))``; converges like ``1 + O(log n / n)`` but is
  monotone for the sequences of interest and supplies the certificate;
* ratio: ``(a_n / a_(n-1))^(1 / s)``; error ``O(1 / n)``;
* accelerated ratio: linear extrapolation of the ratios in ``1 / n``,
  ``n r_n - (n - 1) r_(n-1)``, which removes the ``1 / n`` term.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

Z_SCORE = 4.0
EXACT_SLACK = 1e-12


@dataclass
class ExponentEstimate:
    value: float
    ratio: float
    root: float
    n_range: tuple[int, int]
    method: str = "ratio"
    accelerated: bool = True
    ci_halfwidth: float = 0.0
    monotone_certificate: bool = False
    exact: bool = True
    n: list = field(default_factory=list)
    sequence: list = field(default_factory=list)
    root_seq: list = field(default_factory=list)
    ratio_seq: list = field(default_factory=list)
    accel_seq: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def rows(self):
        """``(n, a_n, root, ratio)`` per computed index, for CSV output."""
        for i, n in enumerate(self.n):
            yield n, self.sequence[i], self.root_seq[i], self.ratio_seq[i]


def _nan_to_none(xs):
    return [None if not np.isfinite(x) else float(x) for x in xs]


def sequences(n: np.ndarray, a: np.ndarray, steps_per_n: int):
    """Root, ratio and accelerated-ratio sequences for positive ``a`` (NaN where undefined)."""
    n = np.asarray(n, dtype=float)
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        loga = np.log(a)
        root = np.exp(loga / (steps_per_n * n))
        root[n == 0] = np.nan
        ratio = np.full(len(a), np.nan)
        consecutive = np.diff(n) == 1
        ratio[1:] = np.where(consecutive, np.exp((loga[1:] - loga[:-1]) / steps_per_n), np.nan)
        accel = np.full(len(a), np.nan)
        accel[1:] = n[1:] * ratio[1:] - (n[1:] - 1) * ratio[:-1]
    return root, ratio, accel


def _last_finite(xs):
    xs = np.asarray(xs, dtype=float)
    ok = np.flatnonzero(np.isfinite(xs))
    return float(xs[ok[-1]]) if len(ok) else float("nan")


def _point(a, n, steps_per_n, accelerate):
    root, ratio, accel = sequences(n, a, steps_per_n)
    if not np.any(np.asarray(a) > 0):
        return 0.0, 0.0, 0.0
    r = _last_finite(ratio)
    v = _last_finite(accel) if accelerate else r
    if not np.isfinite(v):
        v = r if np.isfinite(r) else _last_finite(root)
    return v, r, _last_finite(root)


def from_sequence(n, a, steps_per_n: int = 2, accelerate: bool = True, exact: bool = True,
                  notes=None) -> ExponentEstimate:
    """Estimate from an exactly computed sequence (no sampling error)."""
    n = np.asarray(n, dtype=int)
    a = np.asarray(a, dtype=float)
    root, ratio, accel = sequences(n, a, steps_per_n)
    value, r, rt = _point(a, n, steps_per_n, accelerate)
    finite = root[np.isfinite(root)]
    mono = bool(np.all(np.diff(finite) >= -EXACT_SLACK * np.maximum(finite[1:], 1e-300))) if len(finite) else False
    return ExponentEstimate(
        value=value, ratio=r, root=rt, n_range=(int(n.min()), int(n.max())),
        accelerated=accelerate, monotone_certificate=mono, exact=exact,
        n=n.tolist(), sequence=a.tolist(), root_seq=_nan_to_none(root),
        ratio_seq=_nan_to_none(ratio), accel_seq=_nan_to_none(accel), notes=list(notes or []),
    )


def from_samples(n, samples: np.ndarray, steps_per_n: int = 2, accelerate: bool = True,
                 exact: bool = True, z: float = Z_SCORE, notes=None) -> ExponentEstimate:
    """Estimate of the rate of the mean sequence; CI by leave-one-out jackknife.

    ``samples`` has shape ``(m, len(n))``: one exactly computed sequence per sample.
    """
    samples = np.asarray(samples, dtype=float)
    m = samples.shape[0]
    mean = samples.mean(axis=0)
    est = from_sequence(n, mean, steps_per_n, accelerate, exact, notes)
    if m < 2:
        return est
    loo = (samples.sum(axis=0)[None, :] - samples) / (m - 1)
    vals = np.array([_point(row, np.asarray(n), steps_per_n, accelerate)[0] for row in loo])
    se = float(np.sqrt((m - 1) / m * np.sum((vals - vals.mean()) ** 2)))
    est.ci_halfwidth = z * se
    # root-method monotonicity up to the jackknife error of each increment
    nn = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        root_loo = np.exp(np.log(loo) / (steps_per_n * nn))
    diffs = np.diff(root_loo, axis=1)
    d_se = np.sqrt((m - 1) / m * np.sum((diffs - diffs.mean(axis=0)) ** 2, axis=0))
    root_mean = np.asarray([np.nan if x is None else x for x in est.root_seq], dtype=float)
    d = np.diff(root_mean)
    ok = np.isfinite(d)
    est.monotone_certificate = bool(np.all(d[ok] >= -z * d_se[ok] - EXACT_SLACK))
    return est
