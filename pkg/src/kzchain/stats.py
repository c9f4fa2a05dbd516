"""Empirical estimators and fits for kink-count data.

Cumulants use unbiased k-statistics; uncertainties are 68% percentile
bootstrap intervals (the confidence level is standard for this data; the
bootstrap choice is ours).  Power-law and exponential fits are ordinary least
squares in the appropriate transformed space.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .theory import KinkDistribution


@dataclass(frozen=True)
class CumulantEstimate:
    """Point estimates of the first three cumulants with 68% bootstrap intervals."""

    kappa1: float
    kappa2: float
    kappa3: float
    ci68: dict[str, tuple[float, float]]
    n_samples: int

    def as_dict(self) -> dict:
        return {
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "kappa3": self.kappa3,
            "ci68": {k: list(v) for k, v in self.ci68.items()},
            "n_samples": self.n_samples,
        }


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters with standard errors, the fit range, and the residual."""

    params: dict[str, float]
    stderr: dict[str, float]
    range: tuple[float, float]
    residual: float
    n_points: int = 0

    def as_dict(self) -> dict:
        return {
            "params": dict(self.params),
            "stderr": dict(self.stderr),
            "range": list(self.range),
            "residual": self.residual,
            "n_points": self.n_points,
        }


def _k_statistics(x: np.ndarray, axis=-1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unbiased k-statistics k1, k2, k3.

    k1 = mean; k2 = n m2 / (n-1); k3 = n^2 m3 / ((n-1)(n-2)) with m_q the
    central sample moments.  k3 needs n >= 3.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    mean = x.mean(axis=axis)
    d = x - np.expand_dims(mean, axis)
    m2 = (d ** 2).mean(axis=axis)
    m3 = (d ** 3).mean(axis=axis)
    k2 = n / (n - 1.0) * m2
    k3 = n * n / ((n - 1.0) * (n - 2.0)) * m3
    return mean, k2, k3


def estimate_cumulants(counts, resamples: int = 1000, seed=0,
                       batch: int = 64) -> CumulantEstimate:
    """k-statistic cumulants of integer counts with percentile-bootstrap CIs."""
    x = np.asarray(counts, dtype=float)
    if x.ndim != 1 or x.size < 10:
        raise ValueError(f"need at least 10 counts, got {x.size}")
    if resamples < 100:
        raise ValueError("resamples must be >= 100")
    k1, k2, k3 = _k_statistics(x)
    rng = np.random.default_rng(seed)
    boots = np.empty((resamples, 3))
    done = 0
    while done < resamples:
        m = min(batch, resamples - done)
        idx = rng.integers(0, x.size, size=(m, x.size))
        b1, b2, b3 = _k_statistics(x[idx], axis=1)
        boots[done: done + m, 0] = b1
        boots[done: done + m, 1] = b2
        boots[done: done + m, 2] = b3
        done += m
    lo, hi = np.percentile(boots, [16.0, 84.0], axis=0)
    ci = {name: (float(lo[i]), float(hi[i])) for i, name in
          enumerate(("kappa1", "kappa2", "kappa3"))}
    return CumulantEstimate(float(k1), float(k2), float(k3), ci, int(x.size))


def estimate_cumulant_ratios(counts, resamples: int = 1000, seed=0,
                             batch: int = 64) -> dict:
    """kappa2/kappa1 and kappa3/kappa1 with joint-bootstrap 68% CIs and stderr."""
    x = np.asarray(counts, dtype=float)
    if x.ndim != 1 or x.size < 10:
        raise ValueError(f"need at least 10 counts, got {x.size}")
    k1, k2, k3 = _k_statistics(x)
    if k1 == 0:
        raise ValueError("mean count is zero; ratios undefined")
    rng = np.random.default_rng(seed)
    r21 = np.empty(resamples)
    r31 = np.empty(resamples)
    done = 0
    while done < resamples:
        m = min(batch, resamples - done)
        idx = rng.integers(0, x.size, size=(m, x.size))
        b1, b2, b3 = _k_statistics(x[idx], axis=1)
        r21[done: done + m] = b2 / b1
        r31[done: done + m] = b3 / b1
        done += m
    out = {}
    for name, point, boot in (("ratio21", k2 / k1, r21), ("ratio31", k3 / k1, r31)):
        lo, hi = np.percentile(boot, [16.0, 84.0])
        out[name] = {
            "value": float(point),
            "ci68": (float(lo), float(hi)),
            "stderr": float(boot.std(ddof=1)),
        }
    return out


def _line_fit(x: np.ndarray, y: np.ndarray, w: np.ndarray | None):
    """Least-squares line y = a + b x; returns (a, b, se_a, se_b, rss)."""
    if w is None:
        w = np.ones_like(x)
    sw = w.sum()
    xbar = (w * x).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (x - xbar) ** 2).sum()
    if sxx == 0:
        raise ValueError("degenerate fit: all abscissae equal")
    slope = (w * (x - xbar) * (y - ybar)).sum() / sxx
    intercept = ybar - slope * xbar
    resid = y - intercept - slope * x
    rss = float((w * resid ** 2).sum())
    dof = max(x.size - 2, 1)
    s2 = rss / dof
    se_slope = np.sqrt(s2 / sxx)
    se_intercept = np.sqrt(s2 * (1.0 / sw + xbar ** 2 / sxx))
    return intercept, slope, se_intercept, se_slope, rss


def fit_power_law(points, t_range: tuple[float, float] | None = None) -> FitResult:
    """Fit y = c * t^(-alpha) by least squares on (log t, log y).

    `points` is a sequence of (t, y) or (t, y, weight); weights apply in log
    space (default unweighted).
    """
    rows = [tuple(p) for p in points]
    t = np.array([r[0] for r in rows], dtype=float)
    y = np.array([r[1] for r in rows], dtype=float)
    w = (np.array([r[2] for r in rows], dtype=float)
         if rows and len(rows[0]) > 2 else None)
    if t_range is not None:
        mask = (t >= t_range[0]) & (t <= t_range[1])
        t, y = t[mask], y[mask]
        if w is not None:
            w = w[mask]
    if t.size < 3:
        raise ValueError(f"need at least 3 points in range, got {t.size}")
    if np.any(t <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit requires strictly positive t and y")
    intercept, slope, se_i, se_s, rss = _line_fit(np.log(t), np.log(y), w)
    return FitResult(
        params={"alpha": -slope, "intercept": intercept},
        stderr={"alpha": se_s, "intercept": se_i},
        range=(float(t.min()), float(t.max())),
        residual=rss,
        n_points=int(t.size),
    )


def fit_constant(points) -> FitResult:
    """Inverse-variance-weighted constant through (t, r[, sigma]) points."""
    rows = [tuple(p) for p in points]
    if len(rows) < 2:
        raise ValueError("need at least 2 points")
    t = np.array([r[0] for r in rows], dtype=float)
    r = np.array([r_[1] for r_ in rows], dtype=float)
    sigma = (np.array([r_[2] for r_ in rows], dtype=float)
             if len(rows[0]) > 2 else None)
    if sigma is None:
        c = float(r.mean())
        se = float(r.std(ddof=1) / np.sqrt(r.size))
        rss = float(((r - c) ** 2).sum())
    elif np.all(sigma == 0):
        if np.ptp(r) != 0:
            raise ValueError("all sigma are zero but the values differ")
        c, se, rss = float(r[0]), 0.0, 0.0
    else:
        if np.any(sigma == 0):
            raise ValueError("mixed zero and nonzero sigma")
        w = 1.0 / sigma ** 2
        c = float((w * r).sum() / w.sum())
        se = float(np.sqrt(1.0 / w.sum()))
        rss = float((w * (r - c) ** 2).sum())
    return FitResult(
        params={"constant": c},
        stderr={"constant": se},
        range=(float(t.min()), float(t.max())),
        residual=rss,
        n_points=len(rows),
    )


def histogram(counts) -> KinkDistribution:
    """Normalised integer-bin PMF over 0..max(counts)."""
    x = np.asarray(counts)
    if x.size == 0:
        raise ValueError("need at least one count")
    if np.any(x < 0):
        raise ValueError("counts must be non-negative")
    pmf = np.bincount(x.astype(int)) / x.size
    return KinkDistribution.from_pmf(pmf)


def _pmf_pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    pa = p.pmf if isinstance(p, KinkDistribution) else np.asarray(p, dtype=float)
    qa = q.pmf if isinstance(q, KinkDistribution) else np.asarray(q, dtype=float)
    n = max(pa.size, qa.size)
    return (np.pad(pa, (0, n - pa.size)), np.pad(qa, (0, n - qa.size)))


def tv_distance(p, q) -> float:
    """Trace-norm (total-variation) distance: half the L1 distance of the PMFs."""
    pa, qa = _pmf_pair(p, q)
    return 0.5 * float(np.abs(pa - qa).sum())


def kl_divergence(p, q) -> float:
    """KL divergence sum P log(P/Q) (natural log, 0 log 0 = 0).

    Raises if Q vanishes where P does not, naming the offending count.
    """
    pa, qa = _pmf_pair(p, q)
    bad = np.nonzero((pa > 0) & (qa == 0))[0]
    if bad.size:
        raise ValueError(f"KL undefined: Q(n)=0 but P(n)>0 at n={int(bad[0])}")
    mask = pa > 0
    return float(np.sum(pa[mask] * np.log(pa[mask] / qa[mask])))


@dataclass(frozen=True)
class DecayShapeFit:
    """Competing decay-shape fits with the lower-residual choice marked."""

    power: FitResult
    exponential: FitResult
    preferred: str  # "power" | "exponential"

    def as_dict(self) -> dict:
        return {
            "power": self.power.as_dict(),
            "exponential": self.exponential.as_dict(),
            "preferred": self.preferred,
        }


def fit_decay_shape(points) -> DecayShapeFit:
    """Fit a (t, D) series as both D ~ t^-tau and D ~ exp(-gamma t).

    Both fits are least squares on log D (against log t and t respectively),
    so their residual sums are comparable; `preferred` is the smaller one.
    """
    rows = [tuple(p) for p in points]
    if len(rows) < 4:
        raise ValueError("need at least 4 points")
    t = np.array([r[0] for r in rows], dtype=float)
    d = np.array([r[1] for r in rows], dtype=float)
    if np.any(t <= 0) or np.any(d <= 0):
        raise ValueError("decay fit requires positive t and D")
    log_d = np.log(d)
    i_p, s_p, se_ip, se_sp, rss_p = _line_fit(np.log(t), log_d, None)
    i_e, s_e, se_ie, se_se, rss_e = _line_fit(t, log_d, None)
    power = FitResult(
        params={"tau": -s_p, "intercept": i_p},
        stderr={"tau": se_sp, "intercept": se_ip},
        range=(float(t.min()), float(t.max())),
        residual=rss_p,
        n_points=len(rows),
    )
    expo = FitResult(
        params={"gamma": -s_e, "intercept": i_e},
        stderr={"gamma": se_se, "intercept": se_ie},
        range=(float(t.min()), float(t.max())),
        residual=rss_e,
        n_points=len(rows),
    )
    preferred = "power" if rss_p <= rss_e else "exponential"
    return DecayShapeFit(power=power, exponential=expo, preferred=preferred)
