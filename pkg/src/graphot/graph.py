"""Graphs with a vertex boundary and the blocks of the diffusion operator.

A :class:`Graph` splits its vertices into an interior set ``V`` and a boundary
set ``dV``.  Every matrix built from it indexes vertices in input order:
interior first, then boundary.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DisconnectedInteriorError,
    DuplicateVertexError,
    IsolatedBoundaryError,
    SchemaError,
    SelfLoopError,
    TerminalSetError,
    UnknownVertexError,
    ValidationError,
)

SPEC_KEYS = ("interior", "boundary", "edges", "sources", "receivers")


class BoundaryEdgeWarning(UserWarning):
    """Edges joining two boundary vertices are ignored by every operator."""


@dataclass(frozen=True)
class ProblemParams:
    """Background absorption ``alpha0`` and Robin parameter ``t``."""

    alpha0: float
    t: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.alpha0) or self.alpha0 <= 0:
            raise ValidationError(f"alpha0 must be positive, got {self.alpha0}")
        if not np.isfinite(self.t) or self.t < 0:
            raise ValidationError(f"t must be non-negative, got {self.t}")

    def with_alpha(self, alpha0: float) -> "ProblemParams":
        return ProblemParams(alpha0=alpha0, t=self.t)


@dataclass(frozen=True)
class Graph:
    interior: tuple[str, ...]
    boundary: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    sources: tuple[str, ...]
    receivers: tuple[str, ...]
    # set only for replicated multi-frequency graphs
    allow_disconnected: bool = field(default=False, compare=False)

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    @cached_property
    def index(self) -> dict[str, int]:
        """Position of each vertex in the (interior, boundary) ordering."""
        return {v: i for i, v in enumerate(self.interior + self.boundary)}

    @cached_property
    def interior_edges(self) -> tuple[tuple[int, int], ...]:
        idx, n = self.index, self.n_interior
        out = []
        for a, b in self.edges:
            i, j = idx[a], idx[b]
            if i < n and j < n:
                out.append((i, j))
        return tuple(out)

    @cached_property
    def boundary_edges(self) -> tuple[tuple[int, int], ...]:
        """(interior position, boundary position) for every interior-boundary edge."""
        idx, n = self.index, self.n_interior
        out = []
        for a, b in self.edges:
            i, j = idx[a], idx[b]
            if i < n <= j:
                out.append((i, j - n))
            elif j < n <= i:
                out.append((j, i - n))
        return tuple(out)

    @property
    def source_positions(self) -> list[int]:
        """Positions of the sources within the boundary ordering."""
        n = self.n_interior
        return [self.index[s] - n for s in self.sources]

    @property
    def receiver_positions(self) -> list[int]:
        n = self.n_interior
        return [self.index[r] - n for r in self.receivers]

    def to_spec(self) -> dict:
        return {
            "interior": list(self.interior),
            "boundary": list(self.boundary),
            "edges": [list(e) for e in self.edges],
            "sources": list(self.sources),
            "receivers": list(self.receivers),
        }

    def with_terminals(self, sources: Sequence[str], receivers: Sequence[str]) -> "Graph":
        spec = self.to_spec()
        spec["sources"], spec["receivers"] = list(sources), list(receivers)
        return build_graph(spec)


def _as_ids(value, key) -> list[str]:
    if not isinstance(value, (list, tuple)):
        raise SchemaError(f"{key!r} must be a list of vertex ids")
    ids = []
    for v in value:
        if not isinstance(v, (str, int)) or isinstance(v, bool):
            raise SchemaError(f"{key!r} contains a non-id entry {v!r}")
        ids.append(str(v))
    return ids


def build_graph(spec: Mapping, *, allow_disconnected: bool = False) -> Graph:
    """Validate a graph description and return a :class:`Graph`.

    Parameters
    ----------
    spec : mapping
        Keys ``interior``, ``boundary``, ``edges``, ``sources``, ``receivers``.
        Ids may be strings or integers; they are stored as strings.
    allow_disconnected : bool
        Skip the interior connectivity check.  Used for the replicated graphs
        of multi-frequency problems, which consist of disjoint copies.

    Raises
    ------
    GraphValidationError
        One subclass per violated invariant.
    """
    if not isinstance(spec, Mapping):
        raise SchemaError("graph description must be a mapping")
    unknown = set(spec) - set(SPEC_KEYS)
    if unknown:
        raise SchemaError(f"unknown keys in graph description: {sorted(unknown)}")
    missing = [k for k in SPEC_KEYS if k not in spec]
    if missing:
        raise SchemaError(f"missing keys in graph description: {missing}")

    interior = _as_ids(spec["interior"], "interior")
    boundary = _as_ids(spec["boundary"], "boundary")
    sources = _as_ids(spec["sources"], "sources")
    receivers = _as_ids(spec["receivers"], "receivers")

    seen: set[str] = set()
    for v in interior + boundary:
        if v in seen:
            raise DuplicateVertexError(f"vertex id {v!r} appears more than once")
        seen.add(v)
    bset = set(boundary)
    iset = set(interior)
    if not interior:
        raise SchemaError("graph needs at least one interior vertex")

    raw_edges = spec["edges"]
    if not isinstance(raw_edges, (list, tuple)):
        raise SchemaError("'edges' must be a list of id pairs")
    edges: list[tuple[str, str]] = []
    edge_keys: set[frozenset] = set()
    n_bb = 0
    for e in raw_edges:
        if not isinstance(e, (list, tuple)) or len(e) != 2:
            raise SchemaError(f"edge {e!r} is not a pair")
        a, b = _as_ids(list(e), "edges")
        if a == b:
            raise SelfLoopError(f"self-loop at vertex {a!r}")
        for v in (a, b):
            if v not in seen:
                raise UnknownVertexError(f"edge ({a!r}, {b!r}) references unknown vertex {v!r}")
        key = frozenset((a, b))
        if key in edge_keys:
            continue
        edge_keys.add(key)
        if a in bset and b in bset:
            n_bb += 1
        edges.append((a, b))
    if n_bb:
        warnings.warn(
            f"{n_bb} boundary-boundary edge(s) ignored by the diffusion operator",
            BoundaryEdgeWarning,
            stacklevel=2,
        )

    adj: dict[str, list[str]] = {v: [] for v in seen}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    for v in boundary:
        if not any(w in iset for w in adj[v]):
            raise IsolatedBoundaryError(f"boundary vertex {v!r} has no interior neighbour")

    if not allow_disconnected:
        start = interior[0]
        reached = {start}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for w in adj[x]:
                if w in iset and w not in reached:
                    reached.add(w)
                    queue.append(w)
        if len(reached) != len(interior):
            raise DisconnectedInteriorError(
                f"interior subgraph is disconnected ({len(reached)} of {len(interior)} reachable)"
            )

    for name, terminals in (("sources", sources), ("receivers", receivers)):
        if not terminals:
            raise TerminalSetError(f"{name} must be non-empty")
        if len(set(terminals)) != len(terminals):
            raise TerminalSetError(f"{name} contains duplicates")
        stray = [v for v in terminals if v not in bset]
        if stray:
            raise TerminalSetError(f"{name} not on the boundary: {stray}")

    return Graph(
        interior=tuple(interior),
        boundary=tuple(boundary),
        edges=tuple(edges),
        sources=tuple(sources),
        receivers=tuple(receivers),
        allow_disconnected=allow_disconnected,
    )


@dataclass(frozen=True)
class OperatorBlocks:
    """Dense blocks of the diffusion operator.

    ``L_VV`` is the interior Laplacian block with the full degree (interior
    plus boundary neighbours) on its diagonal, ``A`` the interior-boundary
    incidence matrix and ``D_bnd`` the Robin diagonal ``t + #interior nbrs``.
    """

    L_VV: np.ndarray
    A: np.ndarray
    D_bnd: np.ndarray


def operator_blocks(g: Graph, p: ProblemParams) -> OperatorBlocks:
    n, nb = g.n_interior, g.n_boundary
    L = np.zeros((n, n))
    A = np.zeros((n, nb))
    for i, j in g.interior_edges:
        L[i, j] -= 1.0
        L[j, i] -= 1.0
        L[i, i] += 1.0
        L[j, j] += 1.0
    for i, b in g.boundary_edges:
        A[i, b] = 1.0
        L[i, i] += 1.0
    D = p.t + A.sum(axis=0)
    for arr in (L, A, D):
        arr.setflags(write=False)
    return OperatorBlocks(L_VV=L, A=A, D_bnd=D)


def neighbours(g: Graph) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {v: [] for v in g.interior + g.boundary}
    for a, b in g.edges:
        adj[a].append(b)
        adj[b].append(a)
    return adj


def ids_to_positions(g: Graph, ids: Iterable[str], *, interior_only: bool = False) -> list[int]:
    out = []
    for v in ids:
        v = str(v)
        if v not in g.index:
            raise UnknownVertexError(f"unknown vertex {v!r}")
        i = g.index[v]
        if interior_only and i >= g.n_interior:
            raise ValidationError(f"vertex {v!r} is not an interior vertex")
        out.append(i)
    return out
