"""Scans of the cluster exponent over the percolation parameter and derived critical values."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import estimates
from .cospectral import annealed_estimate, annealed_samples
from .errors import BracketLostError, ParameterError, ZeroConnectivityError
from .graphs import GroupFamily, build_ball
from .percolation import EdgeCoupling, cluster_labels, wilson_interval
from .walks import WalkKernel

COMPARE_TOL = 0.02


@dataclass
class Interval:
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def to_list(self):
        return [self.lo, self.hi]


@dataclass
class ExponentScan:
    family: str
    p_grid: list
    rho_hat: list
    rho_ambient: estimates.ExponentEstimate
    p_ram_hat: Interval
    p_ca_hat: Interval
    tol: float = COMPARE_TOL
    notes: list = field(default_factory=list)

    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.rho_hat])

    def ci(self) -> np.ndarray:
        return np.array([e.ci_halfwidth for e in self.rho_hat])

    def rows(self):
        """``(p, n, p_2n, root_est, ratio_est)`` for every grid point and n."""
        for p, est in zip(self.p_grid, self.rho_hat):
            for n, a, root, ratio in est.rows():
                yield p, n, a, root, ratio

    def summary(self) -> dict:
        return {
            "family": self.family,
            "tol": self.tol,
            "rho_ambient": self.rho_ambient.value,
            "p_ram_hat": self.p_ram_hat.to_list(),
            "p_ca_hat": self.p_ca_hat.to_list(),
            "grid": [
                {"p": p, "rho_hat": e.value, "ratio": e.ratio, "root": e.root,
                 "ci_halfwidth": e.ci_halfwidth, "monotone_certificate": e.monotone_certificate}
                for p, e in zip(self.p_grid, self.rho_hat)
            ],
            "notes": self.notes,
        }


def _brackets(p, rho, ambient, tol):
    """Ramanujan and co-amenable brackets on a sorted grid."""
    ram_ok = rho <= ambient + tol
    ca_ok = rho >= 1.0 - tol
    if not ram_ok.any():
        ram = Interval(0.0, float(p[0]))
    else:
        i = int(np.flatnonzero(ram_ok)[-1])
        ram = Interval(float(p[i]), float(p[i + 1]) if i + 1 < len(p) else 1.0)
    if not ca_ok.any():
        ca = Interval(float(p[-1]), 1.0)
    else:
        j = int(np.flatnonzero(ca_ok)[0])
        ca = Interval(float(p[j - 1]) if j > 0 else 0.0, float(p[j]))
    return ram, ca


def scan(family: GroupFamily | str, k: WalkKernel | None, p_grid, n_max: int, samples: int, seed, *,
         tol: float = COMPARE_TOL, R: int | None = None, workers: int = 1, method: str = "auto") -> ExponentScan:
    """Annealed cluster exponents on a grid of p, all from one monotone coupling."""
    if isinstance(family, str):
        family = GroupFamily.parse(family)
    k = k or WalkKernel.simple(family)
    p = np.array(sorted(set(float(x) for x in p_grid)))
    if len(p) == 0:
        raise ParameterError("empty p grid")
    batch = annealed_samples(family, k, p, n_max, samples, seed, R=R, workers=workers, method=method)
    rho = [annealed_estimate(batch, i) for i in range(len(p))]
    n = np.arange(1, n_max + 1)
    ambient = estimates.from_sequence(n, batch.ambient, 2, True, batch.exact)
    ram, ca = _brackets(p, np.array([e.value for e in rho]), ambient.value, tol)
    notes = [f"cluster sampler: {batch.method}",
             "extrapolation slack 0.01 (no known convergence rate)"]
    if batch.approximate_clusters:
        notes.append("clusters truncated by the ball")
    return ExponentScan(family.name, p.tolist(), rho, ambient, ram, ca, tol, notes)


def refine(family: GroupFamily | str, k: WalkKernel | None, bracket, target: str, steps: int,
           n_max: int, samples: int, seed, *, tol: float = COMPARE_TOL, z: float = estimates.Z_SCORE,
           R: int | None = None, workers: int = 1, method: str = "auto") -> dict:
    """Bisect a critical bracket; each step evaluates (lo, mid, hi) under one coupling.

    Returns the final interval with per-endpoint estimates.  A monotonicity
    violation beyond ``z`` standard errors raises ``BracketLostError``.
    """
    if target not in ("ram", "ca"):
        raise ParameterError("target must be 'ram' or 'ca'")
    lo, hi = (bracket.lo, bracket.hi) if isinstance(bracket, Interval) else map(float, bracket)
    if not 0.0 <= lo <= hi <= 1.0:
        raise ParameterError("bracket must satisfy 0 <= lo <= hi <= 1")
    history = []
    ends = {}
    for step in range(steps):
        if hi == lo:
            break
        mid = 0.5 * (lo + hi)
        s = scan(family, k, [lo, mid, hi], n_max, samples, seed, tol=tol, R=R, workers=workers, method=method)
        v, ci = s.values(), s.ci()
        if v[0] > v[1] + ci[0] + ci[1] or v[1] > v[2] + ci[1] + ci[2]:
            raise BracketLostError(f"exponent not monotone on [{lo}, {mid}, {hi}]: {v.tolist()}")
        amb = s.rho_ambient.value
        inside = v[1] <= amb + tol if target == "ram" else v[1] < 1.0 - tol
        history.append({"step": step, "lo": lo, "mid": mid, "hi": hi, "rho_mid": float(v[1]),
                        "ci_mid": float(ci[1]), "below_threshold": bool(inside)})
        if inside:
            lo = mid
        else:
            hi = mid
        ends = {"lo": (float(v[0]), float(ci[0])) if lo != mid else (float(v[1]), float(ci[1])),
                "hi": (float(v[2]), float(ci[2])) if hi != mid else (float(v[1]), float(ci[1]))}
    return {"target": target, "interval": Interval(lo, hi), "history": history, "endpoints": ends}


@dataclass
class XiEstimate:
    value: float
    intercept: float
    distances: list
    tau: list
    ci: list
    exact: bool

    def to_dict(self):
        return asdict(self)


def xi_estimate(family: GroupFamily | str, p: float, dist_grid, samples: int = 0, seed=None, *,
                R: int | None = None) -> XiEstimate:
    """Exponential decay rate of the two-point connectivity along ``v_n``.

    Tree families use the exact ``tau_p(o, v) = p^dist(o, v)``; other
    families sample ``tau_p(o, n e_1)`` on a ball of radius ``2 max(dist_grid)``.
    """
    if isinstance(family, str):
        family = GroupFamily.parse(family)
    if not 0.0 <= p < 1.0:
        raise ParameterError("xi needs 0 <= p < 1")
    dist = np.array(sorted(set(int(d) for d in dist_grid)))
    if len(dist) < 2 or dist[0] < 1:
        raise ParameterError("need at least two positive distances")
    if family.is_tree:
        if p == 0.0:
            raise ZeroConnectivityError("tau is zero at every distance for p = 0")
        tau = p ** dist.astype(float)
        return XiEstimate(-math.log(p), 0.0, dist.tolist(), tau.tolist(), [[t, t] for t in tau], True)
    if samples < 1:
        raise ParameterError("sampling needs samples >= 1")
    R = 2 * int(dist[-1]) if R is None else R
    g = build_ball(family, R)
    targets = np.array([g.find((0,) * int(d)) for d in dist])
    if np.any(targets < 0):
        raise ParameterError("a grid distance lies outside the ball")
    hits = np.zeros(len(dist), dtype=np.int64)
    for i in range(samples):
        cid = cluster_labels(g, EdgeCoupling(seed, "xi", i).labels(g) <= p)
        hits += cid[targets] == cid[0]
    tau = hits / samples
    ci = [list(wilson_interval(int(h), samples)) for h in hits]
    ok = tau > 0
    if not ok.any():
        raise ZeroConnectivityError(f"no connection observed at any distance in {samples} samples")
    if ok.sum() < 2:
        slope, icpt = -math.log(tau[ok][0]) / dist[ok][0], 0.0
    else:
        slope, icpt = np.polyfit(dist[ok], -np.log(tau[ok]), 1)
    return XiEstimate(float(slope), float(icpt), dist.tolist(), tau.tolist(), ci, False)


def inequality_report(s: ExponentScan, *, p_exp=None, known: dict | None = None) -> list[dict]:
    """Rows comparing the estimated critical values with each other and with known constants.

    ``known`` maps a name (``p_u``, ``p_c``, ``p_exp``) to ``(value, provenance)``.
    """
    known = dict(known or {})
    rows = []
    rho = s.values()
    ci = s.ci()
    amb = s.rho_ambient.value
    worst = float(np.min(rho + ci - amb))
    rows.append({"relation": "rho_G <= rho_B_p for all p", "ok": bool(worst >= -s.tol),
                 "detail": f"min(rho_hat + ci - rho_G) = {worst:.4g}", "source": "estimated"})
    non_amenable = amb < 1.0 - s.tol
    rows.append({"relation": "p_Ram <= p_ca", "applicable": bool(non_amenable),
                 "ok": bool(s.p_ram_hat.lo <= s.p_ca_hat.hi) if non_amenable else None,
                 "detail": f"{s.p_ram_hat.to_list()} vs {s.p_ca_hat.to_list()}", "source": "estimated"})
    if "p_u" in known:
        pu, src = known["p_u"]
        rows.append({"relation": "p_ca <= p_u", "ok": bool(s.p_ca_hat.lo <= pu + 1e-12),
                     "detail": f"{s.p_ca_hat.to_list()} vs {pu}", "source": src})
    else:
        rows.append({"relation": "p_ca <= p_u", "ok": None, "detail": "p_u not supplied", "source": ""})
    if p_exp is None and "p_exp" in known:
        p_exp, src = known["p_exp"]
    else:
        src = "estimated" if p_exp is not None else ""
    if p_exp is not None:
        rows.append({"relation": "p_exp <= p_ca", "ok": bool(p_exp <= s.p_ca_hat.hi + 1e-12),
                     "detail": f"{p_exp} vs {s.p_ca_hat.to_list()}", "source": src})
    else:
        rows.append({"relation": "p_exp <= p_ca", "ok": None, "detail": "p_exp not available", "source": ""})
    rows.append({"relation": "p_[2->2] <= p_Ram", "ok": None, "detail": "not computed", "source": ""})
    if "p_c" in known:
        pc, src = known["p_c"]
        rows.append({"relation": "known p_c", "ok": None, "detail": f"p_c = {pc}", "source": src})
    return rows
