"""Graph and phantom generators."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .graph import Graph, build_graph, ids_to_positions, neighbours

_SIDES = (("N", -1, 0), ("E", 0, 1), ("S", 1, 0), ("W", 0, -1))
_CORNERS = {("N", "W"): "NW", ("N", "E"): "NE", ("S", "W"): "SW", ("S", "E"): "SE"}


def site_id(i: int, j: int) -> str:
    return f"{i},{j}"


def lattice_graph(mrows: int, ncols: int, corners: bool = False) -> Graph:
    """``mrows x ncols`` grid of interior sites with 4-neighbour edges.

    Each perimeter site gets one boundary vertex per exposed side, so the
    default lattice has ``2 (mrows + ncols)`` boundary vertices.  With
    ``corners=True`` every corner site also gets a diagonal boundary vertex.
    All boundary vertices act as sources and receivers.
    """
    if mrows < 1 or ncols < 1:
        raise ValidationError("lattice dimensions must be positive")
    interior = [site_id(i, j) for i in range(mrows) for j in range(ncols)]
    edges, boundary = [], []
    for i in range(mrows):
        for j in range(ncols):
            if j + 1 < ncols:
                edges.append([site_id(i, j), site_id(i, j + 1)])
            if i + 1 < mrows:
                edges.append([site_id(i, j), site_id(i + 1, j)])
    for i in range(mrows):
        for j in range(ncols):
            exposed = []
            for name, di, dj in _SIDES:
                if not (0 <= i + di < mrows and 0 <= j + dj < ncols):
                    b = f"{site_id(i, j)}:{name}"
                    boundary.append(b)
                    edges.append([site_id(i, j), b])
                    exposed.append(name)
            if corners:
                for (a, c), name in _CORNERS.items():
                    if a in exposed and c in exposed:
                        b = f"{site_id(i, j)}:{name}"
                        boundary.append(b)
                        edges.append([site_id(i, j), b])
    return build_graph(
        dict(interior=interior, boundary=boundary, edges=edges, sources=boundary, receivers=boundary)
    )


def path_graph(n_interior: int, far_boundary: bool = False) -> Graph:
    """Path ``1 - 2 - ... - n`` with boundary vertex ``0`` attached to vertex ``1``.

    Vertex ``0`` is the only source and receiver.  ``far_boundary`` adds an
    unused boundary vertex ``n+1`` at the other end.
    """
    if n_interior < 1:
        raise ValidationError("path needs at least one interior vertex")
    interior = [str(k) for k in range(1, n_interior + 1)]
    edges = [[str(k), str(k + 1)] for k in range(1, n_interior)]
    boundary = ["0"]
    edges.append(["0", "1"])
    if far_boundary:
        boundary.append(str(n_interior + 1))
        edges.append([str(n_interior), str(n_interior + 1)])
    return build_graph(dict(interior=interior, boundary=boundary, edges=edges, sources=["0"], receivers=["0"]))


def random_graph(n_interior: int, rng=None, *, extra_edge_prob: float = 0.2, n_boundary: int | None = None,
                 n_sources: int | None = None, n_receivers: int | None = None) -> Graph:
    """Random connected interior (spanning tree plus extra edges) with attached boundary vertices."""
    rng = np.random.default_rng(rng)
    interior = [f"v{k}" for k in range(n_interior)]
    edges = set()
    for k in range(1, n_interior):
        edges.add((int(rng.integers(k)), k))
    for a in range(n_interior):
        for b in range(a + 1, n_interior):
            if (a, b) not in edges and rng.random() < extra_edge_prob:
                edges.add((a, b))
    if n_boundary is None:
        n_boundary = int(rng.integers(1, max(2, n_interior) + 1))
    boundary = [f"b{k}" for k in range(n_boundary)]
    elist = [[interior[a], interior[b]] for a, b in sorted(edges)]
    for k, b in enumerate(boundary):
        deg = 1 + int(rng.random() < 0.3)
        for x in rng.choice(n_interior, size=min(deg, n_interior), replace=False):
            elist.append([interior[int(x)], b])
    ns = n_sources or int(rng.integers(1, n_boundary + 1))
    nr = n_receivers or int(rng.integers(1, n_boundary + 1))
    sources = [boundary[int(k)] for k in sorted(rng.choice(n_boundary, size=ns, replace=False))]
    receivers = [boundary[int(k)] for k in sorted(rng.choice(n_boundary, size=nr, replace=False))]
    return build_graph(dict(interior=interior, boundary=boundary, edges=elist, sources=sources, receivers=receivers))


@dataclass(frozen=True)
class PhantomSpec:
    """Potential recipe.

    ``inclusions`` places ``count`` blocks of height ``amplitude``: rectangles
    of ``size`` sites on lattices, breadth-first balls of ``size[0] * size[1]``
    vertices elsewhere.  ``explicit`` takes a vertex -> value map.
    """

    kind: str = "inclusions"
    count: int = 2
    amplitude: float = 0.1
    size: tuple[int, int] = (3, 3)
    seed: int | None = 0
    values: Mapping[str, float] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: Mapping) -> "PhantomSpec":
        allowed = {"kind", "count", "amplitude", "size", "seed", "values"}
        unknown = set(d) - allowed
        if unknown:
            raise ValidationError(f"unknown phantom keys: {sorted(unknown)}")
        d = dict(d)
        if "size" in d:
            size = d["size"]
            d["size"] = (int(size), int(size)) if np.isscalar(size) else tuple(int(s) for s in size)
        if "values" in d:
            d["values"] = {str(k): float(v) for k, v in d["values"].items()}
        return cls(**d)


def _lattice_coords(g: Graph):
    coords = []
    for v in g.interior:
        parts = v.split(",")
        if len(parts) != 2 or not all(p.lstrip("-").isdigit() for p in parts):
            return None
        coords.append((int(parts[0]), int(parts[1])))
    return coords


def make_phantom(spec: PhantomSpec, g: Graph) -> np.ndarray:
    if spec.kind == "explicit":
        eta = np.zeros(g.n_interior)
        for v, val in spec.values.items():
            if val < 0:
                raise ValidationError(f"negative potential value at {v!r}")
            (pos,) = ids_to_positions(g, [v], interior_only=True)
            eta[pos] = val
        return eta
    if spec.kind != "inclusions":
        raise ValidationError(f"unknown phantom kind {spec.kind!r}")
    if spec.amplitude < 0:
        raise ValidationError("amplitude must be non-negative")
    eta = np.zeros(g.n_interior)
    if spec.amplitude == 0 or spec.count == 0:
        return eta
    rng = np.random.default_rng(spec.seed)
    coords = _lattice_coords(g)
    h, w = spec.size
    if coords is not None:
        where = {c: k for k, c in enumerate(coords)}
        rows = max(c[0] for c in coords) + 1
        cols = max(c[1] for c in coords) + 1
        for _ in range(spec.count):
            i0 = int(rng.integers(0, max(rows - h, 0) + 1))
            j0 = int(rng.integers(0, max(cols - w, 0) + 1))
            for i in range(i0, min(i0 + h, rows)):
                for j in range(j0, min(j0 + w, cols)):
                    if (i, j) in where:
                        eta[where[(i, j)]] = spec.amplitude
    else:
        adj = neighbours(g)
        iset = set(g.interior)
        for _ in range(spec.count):
            start = g.interior[int(rng.integers(g.n_interior))]
            ball, queue = [start], deque([start])
            seen = {start}
            while queue and len(ball) < h * w:
                x = queue.popleft()
                for y in adj[x]:
                    if y in iset and y not in seen and len(ball) < h * w:
                        seen.add(y)
                        ball.append(y)
                        queue.append(y)
            eta[ids_to_positions(g, ball)] = spec.amplitude
    return eta
