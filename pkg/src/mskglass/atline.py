"""de Almeida-Thouless machinery: stability matrices, thresholds, verdicts.

At a converged critical point the second derivative of the symmetry-breaking
slope (see `onersb.zeta_derivative`) has the closed form

    H = beta^2 L K L,    K = 2 beta^2 D G D - D,

with D the variance matrix, L = diag(lam) and G = diag(gamma) built from the
species-weighted quartic susceptibility gamma_s = lam_s E sech^4(cavity
field).  A direction x >= 0 with x' K x > 0 certifies that the single-atom
value is not optimal.  For two species with unit cross variance the existence
of such a direction collapses to the single inequality beta^2 > beta2_m, one
of five closed-form thresholds computed here; the AT line in the (beta, h)
plane is the zero set of beta^2 - beta2_m(beta), located by bisection.

For three or more species no closed-form threshold is known; the witness
search is best-effort (top eigenvector, then a nonnegative-cone ascent) and a
failed search never reports the single-atom phase as consistent.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import InternalInconsistency, NotConverged, Unsupported
from .model import ModelSpec, TempField
from .quadrature import QuadRule, sech4
from .rs import RSSolution, solve_fixed_point

_WITNESS_REL_TOL = 1e-14
_VERDICT_BAND = 1e-12


class Verdict(str, enum.Enum):
    RS_CONSISTENT = "RS-consistent"
    RSB_CERTIFIED = "RSB-certified"
    INDETERMINATE = "indeterminate"

    def __str__(self) -> str:  # plain value in CSV/JSON output
        return self.value


class Thresholds(NamedTuple):
    """The five closed-form beta^2 thresholds of the two-species analysis.

    beta2_u / beta2_t flip the sign of the diagonal stability entries,
    beta2_v the off-diagonal one; beta2_m < beta2_M bracket the window in
    which the sign pattern alone decides.  Symmetry breaking is certified
    exactly above beta2_m.
    """

    beta2_u: float
    beta2_t: float
    beta2_v: float
    beta2_m: float
    beta2_M: float


@dataclass(frozen=True)
class ATReport:
    """Everything the symmetry-breaking test at one (beta, h) produced."""

    beta: float
    h: float
    gamma: np.ndarray
    stability: np.ndarray  # K = 2 beta^2 D G D - D
    hessian: np.ndarray  # H = beta^2 L K L
    thresholds: Thresholds
    verdict: Verdict
    witness_x: Optional[np.ndarray]
    solution: RSSolution

    @property
    def beta2_m(self) -> float:
        return self.thresholds.beta2_m


def quartic_susceptibility(spec: ModelSpec, tf: TempField, sol: RSSolution, rule: QuadRule) -> np.ndarray:
    """gamma_s = lam_s E sech^4(beta eta sqrt(C_s) + h) at the critical point."""
    if not sol.converged:
        raise ValueError("quartic susceptibility requires a converged solution")
    scale = np.sqrt(np.clip(sol.coupling, 0.0, None))
    args = tf.beta * scale[:, None] * rule.nodes + tf.h
    return spec.lam * (sech4(args) @ rule.weights)


def stability_matrices(spec: ModelSpec, tf: TempField, gamma) -> tuple[np.ndarray, np.ndarray]:
    """(K, H) with K = 2 beta^2 D G D - D and H = beta^2 L K L; any M."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (spec.m,):
        raise ValueError("gamma must have one entry per species")
    if (gamma <= 0).any():
        raise ValueError("gamma entries must be positive")
    d = spec.delta2
    k = 2.0 * tf.beta ** 2 * (d * gamma) @ d - d
    k = 0.5 * (k + k.T)  # symmetric in exact arithmetic; enforce it
    h = tf.beta ** 2 * k * np.outer(spec.lam, spec.lam)
    return k, h


def two_species_thresholds(spec: ModelSpec, gamma) -> Thresholds:
    """Closed-form thresholds for M = 2 with unit cross variance.

    With a unit variance product (the classical reduction) the upper
    threshold degenerates to infinity and beta2_v = beta2_m.
    """
    if spec.m != 2:
        raise Unsupported("closed-form thresholds exist for two species only")
    if abs(spec.delta2[0, 1] - 1.0) > 1e-12:
        raise Unsupported("closed-form thresholds require unit cross variance")
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (2,) or (gamma <= 0).any():
        raise ValueError("gamma must be a positive 2-vector")
    d11, d22 = spec.delta2[0, 0], spec.delta2[1, 1]
    g1, g2 = float(gamma[0]), float(gamma[1])
    a, b = g1 * d11, g2 * d22
    root = math.sqrt((a - b) ** 2 + 4.0 * g1 * g2)
    beta2_m = 1.0 / (a + b + root)
    beta2_M = math.inf if a + b - root <= 0.0 else 1.0 / (a + b - root)
    return Thresholds(
        beta2_u=d11 / (2.0 * (g1 * d11 * d11 + g2)),
        beta2_t=d22 / (2.0 * (g1 + g2 * d22 * d22)),
        beta2_v=1.0 / (2.0 * (a + b)),
        beta2_m=beta2_m,
        beta2_M=beta2_M,
    )


def _check_ordering(spec: ModelSpec, th: Thresholds) -> None:
    # Strict ordering is guaranteed when the variance product exceeds 1; at the
    # classical boundary (product exactly 1) beta2_v = beta2_m and beta2_M = inf.
    fuzz = 1.0 + 1e-12
    lo, hi = min(th.beta2_u, th.beta2_t), max(th.beta2_u, th.beta2_t)
    ok = (
        0.0 < th.beta2_v <= th.beta2_m * fuzz
        and th.beta2_m <= lo * fuzz
        and hi <= th.beta2_M * fuzz
    )
    if spec.delta2[0, 0] * spec.delta2[1, 1] > 1.0 + 1e-12:
        ok = ok and th.beta2_v < th.beta2_m < lo and hi < th.beta2_M
    if not ok:
        raise InternalInconsistency(f"threshold ordering violated: {th}")


def positivity_witness(k_matrix) -> Optional[np.ndarray]:
    """Nonnegative direction x with x' K x > 0, or None if none is found.

    For M = 2 the search follows the exact case split on the entries
    (u, v, t): a coordinate axis when a diagonal entry is positive, otherwise
    the strictly positive pair (sqrt(-t), sqrt(-u)) when sqrt(ut) < v.  Every
    candidate is verified numerically before being returned.  For M > 2 the
    search is best-effort: the top eigenvector when it is sign-constant, then
    projected power ascent inside the nonnegative cone from each axis; None
    means "no witness found", never "none exists".
    """
    k = np.asarray(k_matrix, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError("expected a square matrix")
    m = k.shape[0]
    norm = float(np.linalg.norm(k, 2))
    if norm == 0.0 or not np.isfinite(norm):
        return None
    if np.abs(k - k.T).max() > 1e-12 * max(1.0, norm):
        raise ValueError("stability matrix must be symmetric")
    floor = _WITNESS_REL_TOL * norm

    def accept(x: np.ndarray) -> Optional[np.ndarray]:
        x = np.clip(np.asarray(x, dtype=float), 0.0, None)
        if x.max() <= 0.0:
            return None
        x = x / x.max()
        if float(x @ k @ x) > floor:
            return x
        return None

    if m == 2:
        u, v, t = k[0, 0], k[0, 1], k[1, 1]
        candidates = []
        if u > 0:
            candidates.append(np.array([1.0, 0.0]))
        if t > 0:
            candidates.append(np.array([0.0, 1.0]))
        if u <= 0 and t <= 0 and math.sqrt(u * t) < v:
            candidates.append(np.array([math.sqrt(-t), math.sqrt(-u)]))
            candidates.append(np.array([1.0, 1.0]))
        for cand in candidates:
            found = accept(cand)
            if found is not None:
                return found
        return None

    eigvals, eigvecs = np.linalg.eigh(k)
    if eigvals[-1] <= floor:
        return None
    top = eigvecs[:, -1]
    top = top if top[np.argmax(np.abs(top))] >= 0 else -top
    if (top >= -1e-12).all():
        found = accept(top)
        if found is not None:
            return found
    best, best_val = None, floor
    for axis in range(m):
        x = np.zeros(m)
        x[axis] = 1.0
        for _ in range(200):
            step = x + (k @ x) / norm
            step = np.clip(step, 0.0, None)
            size = np.linalg.norm(step)
            if size == 0.0:
                break
            x = step / size
        val = float(x @ k @ x)
        if val > best_val:
            best, best_val = x / x.max(), val
    return best


def at_verdict(
    spec: ModelSpec,
    tf: TempField,
    rule: QuadRule,
    tol: float = 1e-10,
    max_iter: int = 5000,
) -> ATReport:
    """Solve the critical point at (beta, h) and classify the phase.

    RSB-certified iff beta^2 exceeds beta2_m (with the positivity witness
    attached), RS-consistent iff it falls below, indeterminate inside a
    +-1e-12 band where float comparison of the strict inequality is
    meaningless.  The sign test and the witness search are cross-checked
    against each other in both directions.
    """
    if tf.h <= 0:
        raise Unsupported("the phase verdict is defined for h > 0")
    sol = solve_fixed_point(spec, tf, rule, tol=tol, max_iter=max_iter)
    gamma = quartic_susceptibility(spec, tf, sol, rule)
    thresholds = two_species_thresholds(spec, gamma)
    _check_ordering(spec, thresholds)
    k, h_matrix = stability_matrices(spec, tf, gamma)

    beta2 = tf.beta ** 2
    witness = positivity_witness(k)
    if abs(beta2 - thresholds.beta2_m) <= _VERDICT_BAND:
        verdict, attached = Verdict.INDETERMINATE, None
    elif beta2 > thresholds.beta2_m:
        if witness is None:
            raise InternalInconsistency(
                "beta^2 exceeds beta2_m but no nonnegative positive direction was found"
            )
        verdict, attached = Verdict.RSB_CERTIFIED, witness
    else:
        if witness is not None:
            raise InternalInconsistency(
                "beta^2 is below beta2_m yet a nonnegative positive direction exists"
            )
        verdict, attached = Verdict.RS_CONSISTENT, None

    return ATReport(
        beta=tf.beta,
        h=tf.h,
        gamma=gamma,
        stability=k,
        hessian=h_matrix,
        thresholds=thresholds,
        verdict=verdict,
        witness_x=attached,
        solution=sol,
    )


def at_line_beta(
    spec: ModelSpec,
    h: float,
    rule: QuadRule,
    tol: float = 1e-10,
    beta_lo: float = 1e-3,
    beta_max: float = 64.0,
) -> float:
    """Bisect g(beta) = beta^2 - beta2_m(beta) to locate the phase boundary.

    beta2_m depends on beta through the critical point, so the line is found
    pointwise in h by scalar root-finding; tolerance is in beta.
    """
    if h <= 0:
        raise Unsupported("the phase boundary is computed for h > 0")

    def gap(beta: float) -> float:
        tf = TempField(beta=beta, h=h)
        sol = solve_fixed_point(spec, tf, rule)
        gamma = quartic_susceptibility(spec, tf, sol, rule)
        return beta * beta - two_species_thresholds(spec, gamma).beta2_m

    lo = beta_lo
    if gap(lo) >= 0:
        raise NotConverged(f"no bracket: g({lo}) >= 0")
    hi = min(1.0, beta_max)
    while gap(hi) < 0:
        hi *= 2.0
        if hi > beta_max:
            raise NotConverged(f"no bracket: g(beta) < 0 up to beta = {beta_max}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
