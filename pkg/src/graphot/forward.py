"""Direct solution of the discrete diffusion problem.

The unknowns are ordered as (interior values ``u``, boundary values ``v``) and
satisfy the symmetric block system::

    [ L_VV + alpha0 (I + diag(eta))   -A         ] [u]   [f]
    [ -A^T                            diag(D_bnd)] [v] = [g]

with ``g`` the boundary source.  The background Green's function is the
inverse of this matrix at ``eta = 0``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import SolverError, ValidationError
from .graph import Graph, ProblemParams, ids_to_positions, operator_blocks

RESIDUAL_TOL = 1e-10


def _check_eta(g: Graph, eta, allow_negative: bool) -> np.ndarray:
    if eta is None:
        return np.zeros(g.n_interior)
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (g.n_interior,):
        raise ValidationError(f"potential has shape {eta.shape}, expected ({g.n_interior},)")
    if not np.all(np.isfinite(eta)):
        raise ValidationError("potential contains non-finite entries")
    if not allow_negative and np.any(eta < 0):
        raise ValidationError("potential must be non-negative (pass allow_negative=True to override)")
    return eta


def system_matrix(g: Graph, p: ProblemParams, eta=None, *, allow_negative: bool = False) -> np.ndarray:
    """Assemble the full (|V|+|dV|) square system matrix for potential ``eta``."""
    eta = _check_eta(g, eta, allow_negative)
    blk = operator_blocks(g, p)
    top = blk.L_VV + p.alpha0 * np.diag(1.0 + eta)
    M = np.block([[top, -blk.A], [-blk.A.T, np.diag(blk.D_bnd)]])
    return M


def _solve(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            lu = sla.lu_factor(M, check_finite=True)
    except (ValueError, np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
        raise SolverError(f"factorization failed: {exc}") from exc
    with np.errstate(all="ignore"):
        X = sla.lu_solve(lu, rhs)
    if not np.all(np.isfinite(X)):
        raise SolverError("system matrix is numerically singular")
    res = np.max(np.abs(M @ X - rhs))
    scale = np.max(np.abs(M)) * max(np.max(np.abs(X)), 1.0) + np.max(np.abs(rhs))
    if res > RESIDUAL_TOL * scale:
        raise SolverError(f"relative residual {res / scale:.2e} exceeds {RESIDUAL_TOL:g}")
    return X


def solve_direct(
    g: Graph,
    p: ProblemParams,
    eta=None,
    f=None,
    bsrc=None,
    *,
    allow_negative: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve the diffusion equation for interior source ``f`` and boundary source ``bsrc``.

    Returns the interior solution ``u`` and boundary solution ``v``.
    """
    n, nb = g.n_interior, g.n_boundary
    f = np.zeros(n) if f is None else np.asarray(f, dtype=float)
    bsrc = np.zeros(nb) if bsrc is None else np.asarray(bsrc, dtype=float)
    if f.shape != (n,) or bsrc.shape != (nb,):
        raise ValidationError("source vectors do not match the graph")
    M = system_matrix(g, p, eta, allow_negative=allow_negative)
    x = _solve(M, np.concatenate([f, bsrc]))
    return x[:n], x[n:]


@dataclass(frozen=True)
class GreenTable:
    """Background Green's function of a graph, with block access by vertex id."""

    graph: Graph
    params: ProblemParams
    G0: np.ndarray

    @property
    def alpha0(self) -> float:
        return self.params.alpha0

    def block(self, rows: Sequence[str], cols: Sequence[str]) -> np.ndarray:
        """Submatrix ``G0[rows; cols]`` for lists of vertex ids."""
        r = ids_to_positions(self.graph, rows)
        c = ids_to_positions(self.graph, cols)
        return self.G0[np.ix_(r, c)]

    @property
    def VV(self) -> np.ndarray:
        n = self.graph.n_interior
        return self.G0[:n, :n]

    @property
    def RV(self) -> np.ndarray:
        n = self.graph.n_interior
        rows = [n + i for i in self.graph.receiver_positions]
        return self.G0[rows, :n]

    @property
    def VS(self) -> np.ndarray:
        n = self.graph.n_interior
        cols = [n + i for i in self.graph.source_positions]
        return self.G0[:n, cols]

    @property
    def RS(self) -> np.ndarray:
        n = self.graph.n_interior
        rows = [n + i for i in self.graph.receiver_positions]
        cols = [n + i for i in self.graph.source_positions]
        return self.G0[np.ix_(rows, cols)]


def background_green(g: Graph, p: ProblemParams) -> GreenTable:
    M0 = system_matrix(g, p)
    G0 = _solve(M0, np.eye(M0.shape[0]))
    G0.setflags(write=False)
    return GreenTable(graph=g, params=p, G0=G0)


@dataclass(frozen=True)
class Measurement:
    """Robin-to-Dirichlet data ``lam[r, s]`` next to the background ``G0[R; S]``."""

    receivers: tuple[str, ...]
    sources: tuple[str, ...]
    lam: np.ndarray
    background: np.ndarray


def robin_to_dirichlet(g: Graph, p: ProblemParams, eta=None, *, allow_negative: bool = False) -> Measurement:
    n, nb = g.n_interior, g.n_boundary
    spos, rpos = g.source_positions, g.receiver_positions
    rhs = np.zeros((n + nb, len(spos)))
    for k, s in enumerate(spos):
        rhs[n + s, k] = 1.0
    X = _solve(system_matrix(g, p, eta, allow_negative=allow_negative), rhs)
    X0 = _solve(system_matrix(g, p), rhs)
    rows = [n + r for r in rpos]
    return Measurement(
        receivers=g.receivers,
        sources=g.sources,
        lam=X[rows, :],
        background=X0[rows, :],
    )


def scattering_data(m: Measurement) -> np.ndarray:
    """Background minus measured data, flattened receiver-major."""
    lam = np.asarray(m.lam)
    bg = np.asarray(m.background)
    if lam.shape != bg.shape or lam.shape != (len(m.receivers), len(m.sources)):
        raise ValidationError(f"measurement shape mismatch: {lam.shape} vs {bg.shape}")
    return (bg - lam).ravel(order="C")


def simulate(g: Graph, p: ProblemParams, eta) -> np.ndarray:
    """Scattering data for potential ``eta`` by direct solve."""
    return scattering_data(robin_to_dirichlet(g, p, eta))
