"""Kink statistics of annealed transverse-field Ising chains.

Subpackages cover the pipeline end to end: chain instances and kink counting
(`model`), hardware-graph chain generation (`embedding`), classical
spin-vector Monte Carlo dynamics (`svmc`), the exact closed-system mode theory
(`theory`), estimators and fits (`stats`), the classical Boltzmann reference
model (`boltzmann`), and campaign orchestration (`campaign`, `cli`).
"""

__version__ = "0.1.0"
