"""Spin-vector Monte Carlo annealing of the chain (the classical surrogate dynamics).

Each site carries a planar rotor angle theta_i in [0, pi] and the configuration
energy at schedule point s is

    E(theta; s) = (B(s)/2) sum_i J_i cos(theta_i) cos(theta_{i+1})
                  - (A(s)/2) sum_i sin(theta_i)        [GHz * h]

A run starts from theta_i = pi/2, performs N0 * t'_a sequential Metropolis
sweeps with sweep m (0-based) at s = m / (N0 t'_a - 1), and finally projects
each rotor to +1 if theta <= pi/2 else -1.  Per-site updates draw a proposal
uniformly on [0, pi] and, only when the energy change is positive, one
acceptance uniform; this fixes the random stream so runs are reproducible
bit-for-bit given the seed.

The Metropolis inner loops are numba-compiled; their random stream is the
MT19937 stream of numpy's legacy RandomState, which the test suite pins
against a pure-Python twin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .model import AnnealSchedule, ChainInstance, SampleSet, SpinConfig, eval_schedule
from .units import GHZ_TO_KELVIN, energy_over_kt


@dataclass(frozen=True)
class SvmcParams:
    """Annealing-run parameters; temperature is the physical bath value in kelvin."""

    schedule: AnnealSchedule
    temperature_k: float
    n0: int
    ta_prime: float
    samples: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.temperature_k > 0:
            raise ValueError("temperature must be positive")
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")
        if self.ta_prime < 1:
            raise ValueError("ta_prime must be >= 1")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")

    @property
    def n_sweeps(self) -> int:
        return int(round(self.n0 * self.ta_prime))


@dataclass(frozen=True)
class AngleState:
    """A rotor configuration; every angle lies in [0, pi]."""

    angles: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.angles, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("angles must be a non-empty 1-D array")
        if np.any((a < 0) | (a > np.pi)):
            raise ValueError("angles must lie in [0, pi]")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    def project(self) -> SpinConfig:
        """+1 for theta <= pi/2 (ties resolve to +1), -1 otherwise."""
        return SpinConfig.from_spins(np.where(self.angles <= np.pi / 2, 1, -1))


def svmc_energy(instance: ChainInstance, state: AngleState, s: float,
                schedule: AnnealSchedule) -> float:
    """Rotor-chain energy in GHz*h at schedule point s."""
    th = state.angles
    if th.size != instance.length:
        raise ValueError(f"state length {th.size} != instance length {instance.length}")
    a, b = eval_schedule(schedule, s)
    ct = np.cos(th)
    bond = float(np.sum(instance.couplings * ct[:-1] * ct[1:]))
    return 0.5 * b * bond - 0.5 * a * float(np.sum(np.sin(th)))


# ---------------------------------------------------------------------------
# Compiled kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _metropolis_sweeps(couplings, beta_a, beta_b, seed, record_every, n_skip, out_kinks):
    """Sequential Metropolis sweeps through one chain.

    beta_a[m], beta_b[m] are (A/2)/k_BT and (B/2)/k_BT for sweep m.  Projected
    kink counts are recorded every `record_every` sweeps after skipping
    `n_skip`; with record_every=0 nothing is recorded.  Returns the final
    projected spins.
    """
    L = couplings.shape[0] + 1
    np.random.seed(seed)
    ct = np.zeros(L)  # cos(theta); theta starts at pi/2
    st = np.ones(L)   # sin(theta)
    n_sweeps = beta_a.shape[0]
    recorded = 0
    for m in range(n_sweeps):
        ba = beta_a[m]
        bb = beta_b[m]
        for i in range(L):
            proposal = np.pi * np.random.random()
            cp = np.cos(proposal)
            sp = np.sin(proposal)
            nb = 0.0
            if i > 0:
                nb += couplings[i - 1] * ct[i - 1]
            if i < L - 1:
                nb += couplings[i] * ct[i + 1]
            d_e = bb * nb * (cp - ct[i]) - ba * (sp - st[i])
            if d_e <= 0.0 or np.random.random() < np.exp(-d_e):
                ct[i] = cp
                st[i] = sp
        if record_every > 0 and m >= n_skip and (m - n_skip + 1) % record_every == 0:
            if recorded < out_kinks.shape[0]:
                n = 0
                for i in range(L - 1):
                    s1 = 1 if ct[i] >= 0.0 else -1
                    s2 = 1 if ct[i + 1] >= 0.0 else -1
                    if couplings[i] * s1 * s2 > 0:
                        n += 1
                out_kinks[recorded] = n
                recorded += 1
    spins = np.empty(L, dtype=np.int8)
    for i in range(L):
        spins[i] = 1 if ct[i] >= 0.0 else -1
    return spins


@njit(parallel=True, cache=True)
def _anneal_batch(couplings, beta_a, beta_b, seeds):
    n = seeds.shape[0]
    L = couplings.shape[0] + 1
    out = np.empty((n, L), dtype=np.int8)
    dummy = np.empty(0, dtype=np.int64)
    for j in prange(n):
        out[j] = _metropolis_sweeps(couplings, beta_a, beta_b, seeds[j], 0, 0, dummy)
    return out


@njit(cache=True)
def _rotor_chain_correlation(beta_j, beta_g, length, n_burn, n_keep, stride, seed, max_r):
    """Equilibrium <cos theta_0 cos theta_r> on the periodic rotor chain.

    Dimensionless energy: -beta_j sum cos cos' - beta_g sum sin (ferromagnetic
    ordering in the cos component, transverse bias in sin).
    """
    np.random.seed(seed)
    ct = np.zeros(length)
    st = np.ones(length)
    acc = np.zeros(max_r + 1)
    kept = 0
    total = n_burn + n_keep * stride
    for sweep in range(total):
        for i in range(length):
            proposal = np.pi * np.random.random()
            cp = np.cos(proposal)
            sp = np.sin(proposal)
            left = ct[(i - 1) % length]
            right = ct[(i + 1) % length]
            d_e = -beta_j * (left + right) * (cp - ct[i]) - beta_g * (sp - st[i])
            if d_e <= 0.0 or np.random.random() < np.exp(-d_e):
                ct[i] = cp
                st[i] = sp
        if sweep >= n_burn and (sweep - n_burn) % stride == 0:
            for r in range(max_r + 1):
                tot = 0.0
                for i in range(length):
                    tot += ct[i] * ct[(i + r) % length]
                acc[r] += tot / length
            kept += 1
    return acc / kept


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def _sweep_beta_factors(params: SvmcParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-sweep (A/2)/k_BT and (B/2)/k_BT; sweep m sees s = m/(n_sweeps - 1)."""
    n = params.n_sweeps
    s = np.arange(n) / (n - 1) if n > 1 else np.ones(1)
    a, b = eval_schedule(params.schedule, s)
    f = GHZ_TO_KELVIN / params.temperature_k
    return 0.5 * np.asarray(a) * f, 0.5 * np.asarray(b) * f


def sample_seeds(master_seed, count: int, stream: int = 0) -> np.ndarray:
    """Deterministic per-sample 32-bit seeds: SeedSequence(master, spawn_key=(stream,))."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream,))
    return ss.generate_state(count, dtype=np.uint32).astype(np.uint64)


def svmc_anneal(instance: ChainInstance, params: SvmcParams) -> SampleSet:
    """Anneal `params.samples` independent rotor chains and project the results.

    Samples are statistically independent (per-sample seeds split from
    `params.seed`) and the output is bit-reproducible for a fixed seed.
    """
    beta_a, beta_b = _sweep_beta_factors(params)
    seeds = sample_seeds(params.seed, params.samples)
    spins = _anneal_batch(instance.couplings, beta_a, beta_b, seeds)
    configs = tuple(SpinConfig.from_spins(row) for row in spins)
    return SampleSet(instance=instance, anneal_time=params.ta_prime,
                     configs=configs, source="svmc")


def frozen_kink_series(
    instance: ChainInstance,
    schedule: AnnealSchedule,
    s: float,
    temperature_k: float,
    n_burn: int,
    n_keep: int,
    stride: int = 1,
    seed=0,
) -> np.ndarray:
    """Projected kink counts sampled from the dynamics frozen at schedule point s.

    Long-run statistics of this series are the equilibrium check against the
    Boltzmann oracle of the projected chain.
    """
    a, b = eval_schedule(schedule, s)
    ba = energy_over_kt(0.5 * a, temperature_k)
    bb = energy_over_kt(0.5 * b, temperature_k)
    return frozen_kink_series_dimensionless(instance, ba, bb, n_burn, n_keep, stride, seed)


def frozen_kink_series_dimensionless(instance, beta_a: float, beta_b: float,
                                     n_burn: int, n_keep: int, stride: int = 1,
                                     seed=0) -> np.ndarray:
    out = np.empty(n_keep, dtype=np.int64)
    beta_a_arr = np.full(n_burn + n_keep * stride, float(beta_a))
    beta_b_arr = np.full(n_burn + n_keep * stride, float(beta_b))
    seed_arr = sample_seeds(seed, 1)
    _metropolis_sweeps(instance.couplings, beta_a_arr, beta_b_arr, seed_arr[0],
                       stride, n_burn, out)
    return out


def rotor_correlation_length(j_coupling: float, gamma_field: float) -> float:
    """Equilibrium correlation length sqrt(J / (Gamma - 2J)) of the rotor chain.

    Valid in the disordered phase Gamma > 2J (with J > 0); diverges at the
    transition with exponent 1/2.
    """
    if not (j_coupling > 0 and gamma_field > 2.0 * j_coupling):
        raise ValueError(
            f"need Gamma > 2J > 0 (disordered phase), got J={j_coupling}, "
            f"Gamma={gamma_field}"
        )
    return float(np.sqrt(j_coupling / (gamma_field - 2.0 * j_coupling)))


def measure_correlation(
    length: int,
    beta_j: float,
    beta_gamma: float,
    n_burn: int = 3000,
    n_keep: int = 12000,
    stride: int = 15,
    seed=0,
    max_r: int = 8,
) -> np.ndarray:
    """Monte Carlo estimate of C(r) = <cos theta_0 cos theta_r>, r = 0..max_r."""
    seed_arr = sample_seeds(seed, 1)
    return _rotor_chain_correlation(float(beta_j), float(beta_gamma), length,
                                    n_burn, n_keep, stride, seed_arr[0], max_r)


def fit_correlation_length(corr: np.ndarray, r_max: int) -> float:
    """Correlation length from a log-linear fit of C(r) over r = 1..r_max."""
    r = np.arange(1, r_max + 1)
    c = np.asarray(corr)[1: r_max + 1]
    if np.any(c <= 0):
        raise ValueError("correlation must be positive over the fit range")
    slope = np.polyfit(r, np.log(c), 1)[0]
    return -1.0 / slope
