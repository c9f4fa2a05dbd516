"""Classical Boltzmann model of the kink distribution and effective temperature.

For a free-boundary chain of L sites with unit couplings, n kinks cost
dimensionless energy 2n + 1 - L and carry degeneracy C(L-1, n), so

    Q(n; beta') = C(L-1, n) exp(-beta' (2n + 1 - L)) / (e^beta' + e^-beta')^(L-1)

with beta' the dimensionless effective inverse temperature.  Its mean kink
density has the closed form rho = (1 - 1/L) / (1 + e^(2 beta')), inverted by
`beta_from_density`.  beta' relates to a physical temperature through the
device's final Ising scale: beta' = (B(1)/2) / k_B T.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .stats import tv_distance
from .theory import KinkDistribution
from .units import GHZ_TO_KELVIN


class FitConvergenceError(RuntimeError):
    """The effective-temperature optimiser failed; carries search diagnostics."""


def boltzmann_pmf(length: int, beta_prime: float) -> KinkDistribution:
    """Kink-count PMF of the classical chain, evaluated in log space."""
    if length < 2:
        raise ValueError("length must be >= 2")
    n = np.arange(length)
    nb = length - 1
    log_binom = gammaln(nb + 1) - gammaln(n + 1) - gammaln(nb - n + 1)
    b = float(beta_prime)
    # log(e^b + e^-b), overflow-safe
    log_z1 = abs(b) + np.log1p(np.exp(-2.0 * abs(b)))
    log_q = log_binom - b * (2 * n + 1 - length) - nb * log_z1
    q = np.exp(log_q - log_q.max())
    q /= q.sum()  # renormalise away the ~1e-13 float residue of the log-space form
    return KinkDistribution.from_pmf(q)


def density_from_beta(length: int, beta_prime: float) -> float:
    """Mean kink density of the Boltzmann model: (1 - 1/L) / (1 + e^(2 beta'))."""
    return (1.0 - 1.0 / length) / (1.0 + np.exp(2.0 * beta_prime))


def beta_from_density(length: int, rho: float) -> float:
    """Closed-form inversion beta' = 0.5 ln((1 - 1/L)/rho - 1).

    `rho` must lie strictly inside (0, 1 - 1/L).
    """
    upper = 1.0 - 1.0 / length
    if not 0.0 < rho < upper:
        raise ValueError(f"density must lie strictly inside (0, {upper}), got {rho}")
    return 0.5 * float(np.log(upper / rho - 1.0))


@dataclass(frozen=True)
class BetaFit:
    """Effective inverse temperatures from the two distance minimisations."""

    beta_kl: float
    beta_tn: float
    d_kl: float
    d_tn: float

    def as_dict(self) -> dict:
        return {"beta_kl": self.beta_kl, "beta_tn": self.beta_tn,
                "d_kl": self.d_kl, "d_tn": self.d_tn}


def _minimize_beta(objective, start: float, tol: float = 1e-10) -> float:
    """Bracketed scalar minimisation around `start`, expanding until interior."""
    half_width = 2.0
    for _ in range(12):
        lo, hi = start - half_width, start + half_width
        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                              options={"xatol": tol})
        if not res.success:
            raise FitConvergenceError(f"scalar minimisation failed: {res.message}")
        x = float(res.x)
        if lo + 10 * tol < x < hi - 10 * tol:
            return x
        half_width *= 4.0
    raise FitConvergenceError(
        f"optimum kept hitting the bracket edge (last width {half_width}); "
        f"start={start}, last x={x}"
    )


def fit_beta(p_emp, length: int) -> BetaFit:
    """Effective inverse temperature of an empirical kink PMF.

    First minimises the KL divergence (robust against tail fluctuations); the
    result seeds the trace-norm minimisation.  The search starts from the
    closed-form moment-matching value.
    """
    p = p_emp.pmf if isinstance(p_emp, KinkDistribution) else np.asarray(p_emp, float)
    if p.size == 0 or p.sum() <= 0:
        raise ValueError("empirical PMF is empty")
    mean = float(np.arange(p.size) @ p) / float(p.sum())
    rho = mean / length
    upper = 1.0 - 1.0 / length
    if not 0.0 < rho < upper:
        raise ValueError(
            f"empirical mean density {rho} outside (0, {upper}); beta' undefined"
        )
    start = beta_from_density(length, rho)
    # support truncation only: KL needs Q > 0 wherever P > 0, which the full
    # Boltzmann support guarantees as long as P lives on 0..L-1
    if p.size > length:
        raise ValueError(f"PMF support exceeds L-1 = {length - 1} kinks")

    def d_kl(beta):
        # the true Q is strictly positive; exp() underflow can still produce
        # zeros at far-off trial betas, so clip inside the objective only
        q = np.clip(boltzmann_pmf(length, beta).pmf[: p.size], 1e-300, None)
        mask = p > 0
        return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))

    def d_tn(beta):
        return tv_distance(p, boltzmann_pmf(length, beta).pmf)

    beta_kl = _minimize_beta(d_kl, start)
    beta_tn = _minimize_beta(d_tn, beta_kl)
    return BetaFit(beta_kl=beta_kl, beta_tn=beta_tn,
                   d_kl=float(d_kl(beta_kl)), d_tn=float(d_tn(beta_tn)))


def effective_temperature_k(beta_prime: float, b1_half_ghz: float) -> float:
    """Physical effective temperature: T = (B(1)/2) / (k_B beta')."""
    if beta_prime == 0:
        raise ValueError("beta' = 0 has no finite temperature")
    return b1_half_ghz * GHZ_TO_KELVIN / beta_prime


def tn_decay_series(sample_sets, beta_fixed: float) -> list[tuple[float, float]]:
    """Trace-norm distance of each sample set's histogram to a fixed Boltzmann PMF.

    `sample_sets` must be sorted by annealing time; the fixed beta' is normally
    the one fitted at the largest reliable time.
    """
    from .model import kink_counts
    from .stats import histogram

    out = []
    last_t = None
    for ss in sample_sets:
        if last_t is not None and ss.anneal_time <= last_t:
            raise ValueError("sample sets must be sorted by increasing anneal time")
        last_t = ss.anneal_time
        q = boltzmann_pmf(ss.instance.length, beta_fixed)
        p = histogram(kink_counts(ss.instance, ss))
        out.append((float(ss.anneal_time), tv_distance(p, q)))
    return out
