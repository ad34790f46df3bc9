"""Forward Born series on graphs.

The scattering data expands as ``phi = sum_j K_j(eta, ..., eta)`` with::

    K_j(eta_1..eta_j)(r, s) = (-1)**(j+1) alpha0**j
        G0[r;V] D(eta_1) G0[V;V] D(eta_2) ... D(eta_j) G0[V;s]

The alternating sign makes the sum reproduce ``G0[R;S] - Lambda_eta`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ValidationError
from .forward import GreenTable

NORMS = (1, 2, np.inf)


def as_norm(p) -> float:
    """Normalise a norm index given as 1, 2, inf, 'inf' or 'infinity'."""
    if isinstance(p, str):
        key = p.strip().lower()
        if key in ("inf", "infinity", "max"):
            return np.inf
        try:
            p = float(key)
        except ValueError:
            raise ValidationError(f"unsupported norm index {p!r}") from None
    p = float(p)
    if p not in NORMS:
        raise ValidationError(f"norm index must be one of 1, 2, inf; got {p}")
    return p


def conjugate(p) -> float:
    p = as_norm(p)
    if p == 1:
        return np.inf
    if p == np.inf:
        return 1.0
    return 2.0


def vnorm(x, p=2) -> float:
    return float(np.linalg.norm(np.ravel(x), ord=as_norm(p)))


def mixed_norm(M, inner_q, outer_p) -> float:
    """l^q norm of every row of ``M``, then the l^p norm of those row norms."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    rows = np.linalg.norm(M, ord=as_norm(inner_q), axis=1)
    return float(np.linalg.norm(rows, ord=as_norm(outer_p)))


@dataclass(frozen=True)
class SeriesConstants:
    p: float
    nu_p: float
    mu_p: float
    C_green_q: float

    def to_dict(self) -> dict:
        return {"p": _norm_label(self.p), "nu_p": self.nu_p, "mu_p": self.mu_p, "C_green_q": self.C_green_q}


def _norm_label(p):
    return "inf" if p == np.inf else int(p)


def series_constants(G0: GreenTable, norm_p=2) -> SeriesConstants:
    """Constants bounding ``||K_j|| <= nu_p mu_p**(j-1)``."""
    p = as_norm(norm_p)
    q = conjugate(p)
    a = G0.alpha0
    # C_{G,q}: maximum column norm; G0[V;V] is symmetric so rows work too
    C = mixed_norm(G0.VV.T, q, np.inf)
    nu = a * mixed_norm(G0.RV, q, p) * mixed_norm(G0.VS.T, q, p)
    return SeriesConstants(p=p, nu_p=nu, mu_p=a * C, C_green_q=C)


class _Block(NamedTuple):
    """Green's function blocks of one frequency."""

    alpha: float
    RV: np.ndarray
    VV: np.ndarray
    VS: np.ndarray


def _block(G0: GreenTable) -> _Block:
    return _Block(G0.alpha0, np.asarray(G0.RV), np.asarray(G0.VV), np.asarray(G0.VS))


def _apply_k(blk: _Block, etas: Sequence[np.ndarray]) -> np.ndarray:
    j = len(etas)
    X = blk.RV * etas[0]
    for eta in etas[1:]:
        X = (X @ blk.VV) * eta
    X = X @ blk.VS
    sign = 1.0 if j % 2 == 1 else -1.0
    return (sign * blk.alpha**j) * X.ravel()


def k_term(G0: GreenTable, etas: Sequence) -> np.ndarray:
    """Evaluate ``K_j(eta_1, ..., eta_j)`` as a receiver-major data vector."""
    if len(etas) < 1:
        raise ValidationError("k_term needs at least one potential")
    n = G0.graph.n_interior
    arrs = []
    for eta in etas:
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (n,):
            raise ValidationError(f"potential has shape {eta.shape}, expected ({n},)")
        arrs.append(eta)
    return _apply_k(_block(G0), arrs)


class ForwardSeries(NamedTuple):
    partial_sums: list
    tail_bound: float


def forward_bound(consts: SeriesConstants, eta_norm: float, n_terms: int) -> float:
    """Bound on the error of the ``n_terms`` partial sum; ``inf`` outside the convergence region."""
    ratio = consts.mu_p * eta_norm
    if ratio >= 1:
        return np.inf
    return consts.nu_p * eta_norm ** (n_terms + 1) * consts.mu_p**n_terms / (1.0 - ratio)


def forward_series(G0: GreenTable, eta, n_terms: int, norm_p=2) -> ForwardSeries:
    """Partial sums of the forward Born series up to ``n_terms`` terms.

    Each term reuses the previous left product, so the cost is one
    ``|R| x |V| x |V|`` product per order.
    """
    if n_terms < 1:
        raise ValidationError("n_terms must be at least 1")
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (G0.graph.n_interior,):
        raise ValidationError("potential does not match the graph")
    blk = _block(G0)
    partial = []
    total = np.zeros(blk.RV.shape[0] * blk.VS.shape[1])
    X = -blk.alpha * (blk.RV * eta)
    for _ in range(n_terms):
        total = total - (X @ blk.VS).ravel()
        partial.append(total.copy())
        X = -blk.alpha * ((X @ blk.VV) * eta)
    consts = series_constants(G0, norm_p)
    return ForwardSeries(partial, forward_bound(consts, vnorm(eta, norm_p), n_terms))
