"""Generic k-level hierarchical free-energy functional.

For cluster weights 0 < zeta_1 < ... < zeta_k < 1 and per-species overlap
ladders 0 = q_0 <= q_1 <= ... <= q_{k+1} <= q_{k+2} = 1, the functional is

    log 2 + sum_s lam_s X_0^s - (beta^2 / 2) sum_{l=1}^{k+1} zeta_l (Q_{l+1} - Q_l)

where the X recursion runs backward from

    X_{k+2}^s = log cosh(h + beta sum_l eta_{l+1} sqrt(Q_{l+1}^s - Q_l^s))

through X_l^s = (1/zeta_l) log E_{l+1} exp(zeta_l X_{l+1}^s), the l = 0 step
being a plain expectation.  Each X_l^s depends on the noise only through the
accumulated field, so the recursion is evaluated bottom-up on the tensor grid
of quadrature nodes while holding at most an order x order slice in memory.
Cost grows as order**(k+2); levels k <= 3 are practical at moderate order and
nothing is ever truncated.  Levels whose overlap increment vanishes are
integrated out exactly (the reduction is the identity there), which keeps
coalesced ladders bit-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import BadZeta, NonmonotoneOverlap
from .model import ModelSpec, TempField, overlap_contractions
from .quadrature import QuadRule, log_cosh

_LOG2 = math.log(2.0)
_INCREMENT_TOL = 1e-12


@dataclass(frozen=True)
class ParisiParams:
    """Cluster weights zeta (length k) and overlap ladder q (M x (k+1)).

    The boundary columns q_0 = 0 and q_{k+2} = 1 are implicit.  Weights must
    be strictly increasing inside the open interval (0, 1); the endpoint
    values 0 and 1 are handled analytically by the evaluator, never fed to
    the 1/zeta * log E exp(zeta *) form.
    """

    zeta: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        zeta = np.atleast_1d(np.asarray(self.zeta, dtype=float))
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        if zeta.ndim != 1:
            raise BadZeta("zeta must be a vector")
        if ((zeta <= 0.0) | (zeta >= 1.0)).any():
            raise BadZeta("cluster weights must lie strictly inside (0, 1)")
        if zeta.size > 1 and (np.diff(zeta) <= 0).any():
            raise BadZeta("cluster weights must be strictly increasing")
        if q.ndim != 2 or q.shape[1] != zeta.size + 1:
            raise ValueError(f"q must be M x (k+1) with k = {zeta.size}")
        if ((q < -_INCREMENT_TOL) | (q > 1 + _INCREMENT_TOL)).any():
            raise ValueError("overlaps must lie in [0, 1]")
        if q.shape[1] > 1 and (np.diff(q, axis=1) < -_INCREMENT_TOL).any():
            raise NonmonotoneOverlap("each species row of q must be nondecreasing")
        q = np.clip(q, 0.0, 1.0)
        zeta.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "q", q)

    @property
    def k(self) -> int:
        return self.zeta.size

    @property
    def m(self) -> int:
        return self.q.shape[0]


def _reduce(values: np.ndarray, zeta: float, log_w: np.ndarray, w: np.ndarray):
    """Integrate the last axis: plain mean for zeta == 0, else (1/z) log E e^{z x}."""
    if zeta == 0.0:
        return values @ w
    return logsumexp(zeta * values + log_w, axis=-1) / zeta


def _x_zero(h: float, scales: np.ndarray, zetas: np.ndarray, rule: QuadRule) -> float:
    """Backward recursion for one species, as a function of accumulated field.

    `scales[l]` is the noise amplitude beta * sqrt(Q_{l+1}^s - Q_l^s) of level
    l (outermost first) and `zetas[l]` the exponent applied when that level is
    integrated out.  Zero-scale levels drop out exactly.  The two innermost
    active levels are vectorized; outer levels recurse node by node, so peak
    memory is order**2 regardless of k.
    """
    live = [(s, z) for s, z in zip(scales, zetas) if s > 0.0]
    if not live:
        return float(log_cosh(h))
    nodes, w, log_w = rule.nodes, rule.weights, rule.log_weights

    def rec(i: int, shift: float):
        scale, zeta = live[i]
        if i == len(live) - 1:
            x = log_cosh(shift + scale * nodes)
            return _reduce(x, zeta, log_w, w)
        if i == len(live) - 2:
            inner_scale, inner_zeta = live[i + 1]
            x = log_cosh(shift + scale * nodes[:, None] + inner_scale * nodes[None, :])
            x = _reduce(x, inner_zeta, log_w, w)
            return _reduce(x, zeta, log_w, w)
        x = np.array([rec(i + 1, shift + scale * node) for node in nodes])
        return _reduce(x, zeta, log_w, w)

    return float(rec(0, h))


def evaluate(spec: ModelSpec, tf: TempField, params: ParisiParams, rule: QuadRule) -> float:
    """Value of the k-level functional at the given weights and ladder."""
    if params.m != spec.m:
        raise ValueError("params and spec disagree on the species count")
    k = params.k
    m = spec.m

    ladder = np.hstack([np.zeros((m, 1)), params.q, np.ones((m, 1))])  # columns 0 .. k+2
    cons = [overlap_contractions(spec, ladder[:, col]) for col in range(k + 3)]
    q_scalar = np.array([c.scalar for c in cons])
    q_species = np.column_stack([c.species for c in cons])  # (M, k+3)

    increments = np.diff(q_species, axis=1)  # (M, k+2)
    if (increments < -_INCREMENT_TOL).any():
        raise NonmonotoneOverlap(
            f"species coupling ladder decreases by {float(-increments.min()):.3e}"
        )
    increments = np.clip(increments, 0.0, None)

    zetas = np.concatenate([[0.0], params.zeta, [1.0]])  # reduction exponent per level
    beta = tf.beta
    x0 = np.array(
        [_x_zero(tf.h, beta * np.sqrt(increments[s]), zetas, rule) for s in range(m)]
    )

    correction = float(np.sum(zetas[1:] * np.diff(q_scalar)[1:]))
    return float(_LOG2 + spec.lam @ x0 - 0.5 * beta * beta * correction)
