"""Finite connected pieces of the rooted d-regular tree.

A vertex is a tuple of child indices read from the root ``()``.  The root
has ``d + 1`` children ``(0,), ..., (d,)``; every other vertex has ``d``
children with indices ``0..d-1`` and one parent.  Each edge is named by its
child endpoint and oriented away from the root, so ``zeta[child]`` is the
height at the child minus the height at the parent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

import numpy as np

from .errors import DomainError, ShapeError

Vertex = Tuple[int, ...]

__all__ = ["Vertex", "Edge", "FiniteSubtree", "parent", "children"]


def parent(v: Vertex) -> Vertex:
    if not v:
        raise DomainError("the root has no parent")
    return v[:-1]


def children(v: Vertex, d: int) -> List[Vertex]:
    n = d + 1 if not v else d
    return [v + (c,) for c in range(n)]


@dataclass(frozen=True)
class Edge:
    """Edge ``parent -> child``; ``kind`` is internal, down (child outside) or up."""

    child: Vertex
    kind: str

    @property
    def parent(self) -> Vertex:
        return self.child[:-1]

    @property
    def depth(self) -> int:
        """Depth of the parent endpoint."""
        return len(self.child) - 1


class FiniteSubtree:
    """A connected vertex set ``Λ`` together with every edge touching it.

    ``top`` is the vertex of ``Λ`` closest to the root.  Boundary vertices
    ``∂Λ`` are the outside neighbours; each comes with the path of edges
    from ``top`` to it, stored as a signed incidence row.
    """

    def __init__(self, d: int, vertices: Iterable[Vertex]):
        if d < 2:
            raise DomainError("tree degree parameter d must be at least 2")
        self.d = int(d)
        verts = sorted({tuple(int(c) for c in v) for v in vertices}, key=lambda v: (len(v), v))
        if not verts:
            raise ShapeError("subtree needs at least one vertex")
        for v in verts:
            for i, c in enumerate(v):
                limit = d + 1 if i == 0 else d
                if not 0 <= c < limit:
                    raise DomainError(f"vertex {v} has child index {c} out of range")
        vset = set(verts)
        self.top: Vertex = verts[0]
        for v in verts[1:]:
            if len(v) <= len(self.top) or parent(v) not in vset:
                raise ShapeError(f"vertex set is not connected at {v}")
        self.vertices: List[Vertex] = verts
        self._vset = vset

        edges: List[Edge] = []
        boundary: List[Tuple[Vertex, Vertex]] = []  # (outside vertex, inside neighbour)
        if self.top:
            edges.append(Edge(self.top, "up"))
            boundary.append((parent(self.top), self.top))
        for v in verts:
            for c in children(v, d):
                if c in vset:
                    edges.append(Edge(c, "internal"))
                else:
                    edges.append(Edge(c, "down"))
                    boundary.append((c, v))
        self.edges: List[Edge] = edges
        self.edge_index: Dict[Vertex, int] = {e.child: i for i, e in enumerate(edges)}
        self.boundary = boundary
        self.incidence = self._path_incidence()

    @classmethod
    def ball(cls, d: int, radius: int, center_depth: int = 0) -> "FiniteSubtree":
        """Vertices within ``radius`` below the ray vertex at ``center_depth``."""
        top: Vertex = (0,) * center_depth
        layer = [top]
        verts = [top]
        for _ in range(radius):
            layer = [c for v in layer for c in children(v, d)]
            verts.extend(layer)
        return cls(d, verts)

    @classmethod
    def singleton(cls, d: int, vertex: Vertex = ()) -> "FiniteSubtree":
        return cls(d, [vertex])

    def __contains__(self, v) -> bool:
        return tuple(v) in self._vset

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def max_depth(self) -> int:
        """Largest depth of any vertex touched, including boundary vertices."""
        return max(len(y) for y, _ in self.boundary) if self.boundary else len(self.vertices[-1])

    def path_from_top(self, y: Vertex) -> List[Tuple[int, int]]:
        """Signed edges ``(edge index, ±1)`` whose increments sum to ``h(y) - h(top)``."""
        top = self.top
        if top and y == parent(top):
            return [(self.edge_index[top], -1)]
        if y[: len(top)] != top:
            raise DomainError(f"{y} is not below the top vertex {top}")
        return [(self.edge_index[y[:k]], 1) for k in range(len(top) + 1, len(y) + 1)]

    def _path_incidence(self) -> np.ndarray:
        rows = np.zeros((len(self.boundary), len(self.edges)), dtype=np.int64)
        for b, (y, _) in enumerate(self.boundary):
            for idx, sign in self.path_from_top(y):
                rows[b, idx] = sign
        return rows

    def zeta_vector(self, zeta) -> np.ndarray:
        """Accept a mapping child-vertex -> increment or a sequence in edge order."""
        if isinstance(zeta, dict):
            missing = [e.child for e in self.edges if e.child not in zeta]
            if missing:
                raise ShapeError(f"no increment given for edges {missing[:3]}")
            return np.array([int(zeta[e.child]) for e in self.edges], dtype=np.int64)
        arr = np.asarray(zeta, dtype=np.int64)
        if arr.shape[-1] != len(self.edges):
            raise ShapeError(f"{arr.shape[-1]} increments for {len(self.edges)} edges")
        return arr

    def __repr__(self):
        return f"FiniteSubtree(d={self.d}, top={self.top}, vertices={len(self.vertices)}, edges={len(self.edges)})"
