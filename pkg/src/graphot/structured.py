"""Structure-constrained inversion and multi-frequency recovery.

A linear structure map ``F`` parameterises the potential as ``eta = F c``.
The inverse series is then run for the coefficients ``c``: the linear term is
inverted through ``(K1 F)^+`` and every lower-order reconstruction is mapped
through ``F`` before it re-enters the forward operators.

Measurements at several background absorptions ``alpha_1..alpha_m`` are
handled as one problem on ``m`` disjoint copies of the graph, with the
replication map tying the copies to a single potential.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla

from .born import _block
from .errors import StructureError, ValidationError
from .forward import GreenTable, background_green, simulate, system_matrix
from .graph import Graph, ProblemParams, build_graph, ids_to_positions
from .inverse import (
    RANK_TOL,
    SeriesResult,
    _check_terms,
    _collect,
    _inverse_terms,
    _k1_from_block,
    regularized_pinv,
)

KINDS = ("support-restriction", "piecewise-constant", "replication", "custom")


@dataclass(frozen=True)
class StructureMap:
    matrix: np.ndarray
    kind: str

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def __call__(self, coeffs) -> np.ndarray:
        return self.matrix @ np.asarray(coeffs, dtype=float)


def _full_rank(F: np.ndarray) -> bool:
    s = np.linalg.svd(F, compute_uv=False)
    return s.size == F.shape[1] and s[0] > 0 and s[-1] > RANK_TOL * s[0]


def structure_map(kind: str, params: Mapping, g: Graph) -> StructureMap:
    """Build a structure map on the interior vertices of ``g``.

    ``support-restriction`` takes ``{"support": [ids]}``; ``piecewise-constant``
    takes ``{"partition": [[ids], ...]}`` covering the interior exactly once;
    ``replication`` takes ``{"copies": m}`` and stacks ``m`` identities;
    ``custom`` takes ``{"matrix": rows}`` of shape ``(|V|, k)``.
    """
    n = g.n_interior
    if kind == "support-restriction":
        support = list(params.get("support", []))
        if not support:
            raise StructureError("support must be non-empty")
        cols = ids_to_positions(g, support, interior_only=True)
        if len(set(cols)) != len(cols):
            raise StructureError("support contains duplicates")
        F = np.zeros((n, len(cols)))
        F[cols, np.arange(len(cols))] = 1.0
    elif kind == "piecewise-constant":
        cells = [list(c) for c in params.get("partition", [])]
        if not cells or any(not c for c in cells):
            raise StructureError("partition cells must be non-empty")
        F = np.zeros((n, len(cells)))
        seen: set[int] = set()
        for k, cell in enumerate(cells):
            pos = ids_to_positions(g, cell, interior_only=True)
            if seen.intersection(pos):
                raise StructureError("partition cells overlap")
            seen.update(pos)
            F[pos, k] = 1.0
        if len(seen) != n:
            raise StructureError(f"partition covers {len(seen)} of {n} interior vertices")
    elif kind == "replication":
        m = int(params.get("copies", 0))
        if m < 1:
            raise StructureError("replication needs at least one copy")
        F = np.vstack([np.eye(n)] * m)
    elif kind == "custom":
        F = np.atleast_2d(np.asarray(params.get("matrix"), dtype=float))
        if F.shape[0] != n:
            raise StructureError(f"custom map has {F.shape[0]} rows, expected {n}")
    else:
        raise StructureError(f"unknown structure kind {kind!r}; expected one of {KINDS}")
    if F.shape[1] > F.shape[0]:
        raise StructureError("structure map has more coefficients than vertices")
    if not _full_rank(F):
        raise StructureError("structure map is rank deficient")
    F.setflags(write=False)
    return StructureMap(matrix=F, kind=kind)


def identity_map(g: Graph) -> StructureMap:
    F = np.eye(g.n_interior)
    F.setflags(write=False)
    return StructureMap(matrix=F, kind="custom")


@dataclass(frozen=True)
class MultiFreqProblem:
    """``m`` copies of a base graph, copy ``i`` carrying absorption ``alphas[i]``.

    ``block_G0`` is the Green's function of the replicated graph in its own
    vertex ordering (all copies' interiors, then all copies' boundaries).
    ``greens[i]`` is the Green's table of copy ``i`` on the base graph.
    """

    base_graph: Graph
    alphas: tuple[float, ...]
    t: float
    replicated_graph: Graph
    greens: tuple[GreenTable, ...]
    block_G0: np.ndarray
    projection: dict = field(repr=False)
    F: StructureMap = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.alphas)

    def stacked_k1(self) -> np.ndarray:
        """Rows of every frequency's linear term, frequency-major."""
        return np.vstack([_k1_from_block(_block(G)) for G in self.greens])

    def simulate(self, eta) -> np.ndarray:
        """Stacked scattering data of a base-graph potential, one direct solve per frequency."""
        return np.concatenate([simulate(self.base_graph, G.params, eta) for G in self.greens])

    def system_matrix(self, eta=None) -> np.ndarray:
        """Full system of the replicated graph for the replicated potential ``F eta``."""
        g = self.base_graph
        n, nb = g.n_interior, g.n_boundary
        m = self.m
        N = m * (n + nb)
        M = np.zeros((N, N))
        for i, G in enumerate(self.greens):
            Mi = system_matrix(g, G.params, eta)
            idx = np.concatenate([i * n + np.arange(n), m * n + i * nb + np.arange(nb)])
            M[np.ix_(idx, idx)] = Mi
        return M


def _replicate(g: Graph, m: int) -> tuple[Graph, dict]:
    def tag(v, i):
        return f"{v}@{i + 1}"

    proj = {}
    interior, boundary, edges, sources, receivers = [], [], [], [], []
    for i in range(m):
        interior += [tag(v, i) for v in g.interior]
    for i in range(m):
        boundary += [tag(v, i) for v in g.boundary]
    for i in range(m):
        edges += [[tag(a, i), tag(b, i)] for a, b in g.edges]
        sources += [tag(s, i) for s in g.sources]
        receivers += [tag(r, i) for r in g.receivers]
        for v in g.interior + g.boundary:
            proj[tag(v, i)] = v
    spec = dict(interior=interior, boundary=boundary, edges=edges, sources=sources, receivers=receivers)
    return build_graph(spec, allow_disconnected=True), proj


def multifreq_problem(g: Graph, alphas: Sequence[float], t: float = 0.0) -> MultiFreqProblem:
    alphas = tuple(float(a) for a in alphas)
    if not alphas:
        raise ValidationError("need at least one frequency")
    greens = tuple(background_green(g, ProblemParams(alpha0=a, t=t)) for a in alphas)
    rep, proj = _replicate(g, len(alphas))
    n, nb, m = g.n_interior, g.n_boundary, len(alphas)
    idx = [np.concatenate([i * n + np.arange(n), m * n + i * nb + np.arange(nb)]) for i in range(m)]
    G = np.zeros((m * (n + nb),) * 2)
    for i, Gi in enumerate(greens):
        G[np.ix_(idx[i], idx[i])] = Gi.G0
    G.setflags(write=False)
    F = structure_map("replication", {"copies": m}, g)
    return MultiFreqProblem(
        base_graph=g, alphas=alphas, t=t, replicated_graph=rep, greens=greens,
        block_G0=G, projection=proj, F=F,
    )


@dataclass
class StructuredResult(SeriesResult):
    """Series for the structure coefficients plus their image under ``F``."""

    fmatrix: np.ndarray | None = None

    @property
    def mapped_partial_sums(self) -> list:
        return [self.fmatrix @ c for c in self.partial_sums]

    @property
    def eta(self) -> np.ndarray:
        return self.fmatrix @ self.estimate


def modified_inverse_series(
    phi,
    source,
    structure: StructureMap | None = None,
    lambda_reg: float = 0.0,
    n_terms: int = 5,
    norm_p=2,
) -> StructuredResult:
    """Inverse series constrained to potentials ``eta = F c``.

    Parameters
    ----------
    phi : array_like
        Scattering data.  For a :class:`MultiFreqProblem` the per-frequency
        vectors are concatenated in frequency order.
    source : GreenTable or MultiFreqProblem
        Single-frequency Green's table or a multi-frequency problem.
    structure : StructureMap, optional
        Map from coefficients to base-graph potentials; identity if omitted.
        For multi-frequency problems the replication across copies is implied.

    Returns
    -------
    StructuredResult
        ``terms``/``partial_sums`` hold coefficients, ``mapped_partial_sums``
        the base-graph potentials ``F c``.
    """
    _check_terms(n_terms)
    if isinstance(source, MultiFreqProblem):
        g = source.base_graph
        blocks = [_block(G) for G in source.greens]
    elif isinstance(source, GreenTable):
        g = source.graph
        blocks = [_block(source)]
    else:
        raise ValidationError("source must be a GreenTable or MultiFreqProblem")
    F = identity_map(g).matrix if structure is None else structure.matrix
    if F.shape[0] != g.n_interior:
        raise StructureError(f"structure map has {F.shape[0]} rows, expected {g.n_interior}")
    K1F = np.vstack([_k1_from_block(b) for b in blocks]) @ F
    phi = np.asarray(phi, dtype=float).ravel()
    if phi.shape != (K1F.shape[0],):
        raise ValidationError(f"data has length {phi.size}, expected {K1F.shape[0]}")
    pinv = regularized_pinv(K1F, lambda_reg)
    res = _collect(_inverse_terms(blocks, pinv, phi, n_terms, fmap=F), norm_p)
    return StructuredResult(res.terms, res.partial_sums, res.term_norms, res.norm_p, fmatrix=F)


class InvertibilityReport(NamedTuple):
    rank: int
    sigma_min: float
    sigma_max: float
    condition: float
    verdict: str

    def to_dict(self) -> dict:
        return self._asdict()


def invertibility_report(K) -> InvertibilityReport:
    """Numerical rank (threshold ``1e-10 sigma_max``) and conditioning of a linear term."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    rows, cols = K.shape
    s = sla.svdvals(K)
    smax = float(s[0]) if s.size else 0.0
    rank = int(np.sum(s > RANK_TOL * smax)) if smax > 0 else 0
    smin = float(s[-1]) if rows >= cols and s.size else 0.0
    cond = smax / smin if smin > 0 else np.inf
    verdict = "determined" if rank == cols else "underdetermined"
    return InvertibilityReport(rank, smin, smax, cond, verdict)
