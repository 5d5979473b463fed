"""Model parameterization and validation of the standing assumptions.

A model is an M x M symmetric matrix of coupling variances `delta2` together
with species proportions `lam` summing to 1.  Three validation modes exist:

* ``convex``: delta2 positive semidefinite (the regime where the variational
  free-energy formula is proved).
* ``two-species-standard``: M = 2, unit cross variance, variance product > 1
  and lambda_1 * delta2_11 >= lambda_2 * delta2_22 -- the normalization under
  which the closed-form temperature thresholds hold.
* ``unchecked``: everything passes, but results are tagged non-rigorous
  (exploration of non-convex couplings such as the bipartite model).

Proportions are stored exactly as given; a sum away from 1 is rejected rather
than silently renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BadDimension

VALIDATION_MODES = ("convex", "two-species-standard", "unchecked")

_SYM_TOL = 1e-14
_LAM_TOL = 1e-12
_PSD_TOL = 1e-12


@dataclass(frozen=True)
class ModelSpec:
    """Variance matrix and species proportions of a multi-species model."""

    delta2: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        delta2 = np.array(self.delta2, dtype=float)
        lam = np.array(self.lam, dtype=float)
        if delta2.ndim != 2 or delta2.shape[0] != delta2.shape[1]:
            raise BadDimension("delta2 must be a square matrix")
        m = delta2.shape[0]
        if m < 2:
            raise ValueError("at least two species are required")
        if lam.shape != (m,):
            raise BadDimension("lam must have one entry per species")
        if not (np.isfinite(delta2).all() and np.isfinite(lam).all()):
            raise ValueError("model parameters must be finite")
        if np.abs(delta2 - delta2.T).max() > _SYM_TOL:
            raise ValueError("delta2 must be symmetric")
        if (delta2 < -_SYM_TOL).any():
            raise ValueError("variances must be nonnegative")
        if ((lam <= 0) | (lam >= 1)).any():
            raise ValueError("each proportion must lie strictly in (0, 1)")
        if abs(lam.sum() - 1.0) > _LAM_TOL:
            raise ValueError(f"proportions must sum to 1, got {lam.sum()!r}")
        delta2.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "delta2", delta2)
        object.__setattr__(self, "lam", lam)

    @property
    def m(self) -> int:
        return self.delta2.shape[0]

    @property
    def sk_reduction(self) -> bool:
        """True when every variance equals 1 (the classical single-species model)."""
        return bool(np.abs(self.delta2 - 1.0).max() <= _SYM_TOL)


@dataclass(frozen=True)
class TempField:
    """A point (beta, h) in the phase plane: inverse temperature and field."""

    beta: float
    h: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.beta) and math.isfinite(self.h)):
            raise ValueError("beta and h must be finite")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.h < 0:
            raise ValueError("h must be nonnegative")


class AssumptionCheck(NamedTuple):
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    mode: str
    checks: tuple
    sk_reduction: bool
    rigorous: bool

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> tuple:
        return tuple(c for c in self.checks if not c.passed)


def validate(spec: ModelSpec, mode: str = "convex") -> ValidationReport:
    """Check the standing assumptions, one report entry per assumption.

    Failures are report entries, never exceptions.  ``two-species-standard``
    implies the convex checks; ``unchecked`` passes everything but flags the
    report (and all downstream results) as non-rigorous.
    """
    if mode not in VALIDATION_MODES:
        raise ValueError(f"unknown validation mode {mode!r}")

    d, lam = spec.delta2, spec.lam
    checks = [
        AssumptionCheck("symmetric-variances", True, "enforced at construction"),
        AssumptionCheck("nonnegative-variances", True, "enforced at construction"),
        AssumptionCheck("proportions", True, "in (0,1), sum 1; enforced at construction"),
    ]
    rigorous = True

    if mode == "unchecked":
        checks.append(AssumptionCheck("unchecked", True, "all assumptions waived; results are non-rigorous"))
        rigorous = False
    else:
        min_eig = float(np.linalg.eigvalsh(d)[0])
        checks.append(
            AssumptionCheck(
                "positive-semidefinite",
                min_eig >= -_PSD_TOL,
                f"smallest eigenvalue {min_eig:.3e}",
            )
        )
        if mode == "two-species-standard":
            two = spec.m == 2
            checks.append(AssumptionCheck("two-species", two, f"M = {spec.m}"))
            if two:
                cross_ok = abs(d[0, 1] - 1.0) <= 1e-12
                prod = d[0, 0] * d[1, 1]
                order_ok = lam[0] * d[0, 0] >= lam[1] * d[1, 1] - 1e-12
                checks.append(AssumptionCheck("unit-cross-variance", cross_ok, f"delta2_12 = {d[0, 1]!r}"))
                checks.append(AssumptionCheck("variance-product", prod > 1.0, f"delta2_11 * delta2_22 = {prod!r}"))
                checks.append(
                    AssumptionCheck(
                        "species-ordering",
                        order_ok,
                        f"lam1*delta2_11 = {lam[0] * d[0, 0]!r} vs lam2*delta2_22 = {lam[1] * d[1, 1]!r}",
                    )
                )

    return ValidationReport(mode=mode, checks=tuple(checks), sk_reduction=spec.sk_reduction, rigorous=rigorous)


class Contractions(NamedTuple):
    """Quadratic and per-species linear contractions of an overlap vector."""

    scalar: float
    species: np.ndarray


def overlap_contractions(spec: ModelSpec, q) -> Contractions:
    """Contract per-species overlaps against the weighted variance matrix.

    Returns (sum_{s,t} delta2_st lam_s lam_t q_s q_t,
             2 * sum_t delta2_st lam_t q_t) -- the scalar energy contraction
    and the per-species coupling vector driving the cavity-field scale.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (spec.m,):
        raise BadDimension(f"expected overlap vector of length {spec.m}, got shape {q.shape}")
    w = spec.lam * q
    return Contractions(scalar=float(w @ spec.delta2 @ w), species=2.0 * (spec.delta2 @ w))
