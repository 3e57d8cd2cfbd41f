"""Radially symmetric height-periodic boundary laws built from backward orbits.

Every vector is stored with one-norm 1.  Depth ``n`` counts the distance of
the tail vertex of an edge from the root:

* ``inbound[n]`` is the value on an edge from depth ``n`` toward the root
  (``n >= 1``), ``inbound[n] = G_d(orbit[n-1])``;
* ``outbound[n]`` is the value on an edge from depth ``n`` away from the
  root (``n >= 0``), ``outbound[0] = G_d(S_q(u))`` and
  ``outbound[n] ∝ (Q^q outbound[n-1]) ⊙ orbit[n-1]^(d-1)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import DepthError, DomainError, ShapeError
from .simplex_dynamics import (
    BackwardOrbit,
    apply_S,
    as_simplex,
    backward_orbit,
    equidistribution,
    hadamard_power,
)
from .transfer_ops import FuzzyOperator

__all__ = [
    "DEFAULT_DEPTH",
    "RadialBoundaryLaw",
    "build",
    "free_law",
    "law_from_seed",
    "apply_F",
    "ConvergenceReport",
    "outbound_convergence",
    "equation_residuals",
]

DEFAULT_DEPTH = 64


@dataclass(frozen=True, eq=False)
class RadialBoundaryLaw:
    q: int
    d: int
    depth: int
    seed: np.ndarray
    inbound: List[np.ndarray]  # index 0 unused (None), 1..depth
    outbound: List[np.ndarray]  # 0..depth
    truncated: bool = False
    note: str = ""

    def toward_root(self, n: int) -> np.ndarray:
        """Value on an edge from a vertex at depth ``n`` to its parent."""
        if not 1 <= n <= self.depth:
            raise DepthError(f"inbound depth {n} outside 1..{self.depth}")
        return self.inbound[n]

    def away_from_root(self, n: int) -> np.ndarray:
        """Value on an edge from a vertex at depth ``n`` to one of its children."""
        if not 0 <= n <= self.depth:
            raise DepthError(f"outbound depth {n} outside 0..{self.depth}")
        return self.outbound[n]

    def edge_value(self, tail_depth: int, toward_root: bool) -> np.ndarray:
        return self.toward_root(tail_depth) if toward_root else self.away_from_root(tail_depth)

    @property
    def is_free(self) -> bool:
        eq = equidistribution(self.q)
        vecs = self.inbound[1:] + self.outbound
        return all(np.allclose(v, eq, rtol=0, atol=1e-15) for v in vecs)

    def periodic_extension(self, t: int) -> "RadialBoundaryLaw":
        """The same law read as a ``q*t``-periodic one (every vector tiled ``t`` times)."""
        if t < 1:
            raise DomainError("extension factor must be positive")

        def tile(v):
            return np.tile(v, t) / t

        return RadialBoundaryLaw(
            self.q * t,
            self.d,
            self.depth,
            tile(self.seed),
            [None] + [tile(v) for v in self.inbound[1:]],
            [tile(v) for v in self.outbound],
            self.truncated,
            self.note,
        )

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "d": self.d,
            "depth": self.depth,
            "seed": self.seed.tolist(),
            "inbound": [v.tolist() for v in self.inbound[1:]],
            "outbound": [v.tolist() for v in self.outbound],
            "truncated": self.truncated,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "RadialBoundaryLaw":
        inbound = [None] + [np.asarray(v, dtype=float) for v in data["inbound"]]
        outbound = [np.asarray(v, dtype=float) for v in data["outbound"]]
        depth = int(data["depth"])
        if len(inbound) != depth + 1 or len(outbound) != depth + 1:
            raise ShapeError("inbound/outbound lengths do not match depth")
        return cls(
            int(data["q"]),
            int(data["d"]),
            depth,
            np.asarray(data["seed"], dtype=float),
            inbound,
            outbound,
            bool(data.get("truncated", False)),
        )

    @classmethod
    def from_json(cls, text: str) -> "RadialBoundaryLaw":
        return cls.from_dict(json.loads(text))


def apply_F(fz: FuzzyOperator, a, z) -> np.ndarray:
    """``F_a(z) = Q^q z ⊙ a`` normalized to one-norm 1."""
    a = np.asarray(a, dtype=float)
    z = np.asarray(z, dtype=float)
    if a.shape != (fz.q,) or z.shape != (fz.q,):
        raise ShapeError(f"vectors must have length q={fz.q}")
    v = fz.apply(z) * a
    return v / v.sum()


def build(
    orbit: BackwardOrbit, d: int, fz: FuzzyOperator, depth: int = DEFAULT_DEPTH
) -> RadialBoundaryLaw:
    """Assemble inbound and outbound values from the orbit points.

    If the orbit is shorter than ``depth`` the law is built as deep as the
    orbit allows and flagged as truncated.
    """
    if depth < 1:
        raise DepthError("depth must be at least 1")
    points = orbit.points
    q = fz.q
    if points[0].shape != (q,):
        raise ShapeError("orbit dimension does not match the fuzzy operator")
    truncated = not orbit.complete
    note = orbit.diagnostic
    if len(points) < depth:
        truncated = True
        note = note or f"orbit has {len(points)} points, law cut to that depth"
        depth = len(points)
    inbound = [None] + [hadamard_power(points[n - 1], d) for n in range(1, depth + 1)]
    outbound = [hadamard_power(apply_S(fz, d, points[0]), d)]
    for n in range(1, depth + 1):
        outbound.append(apply_F(fz, points[n - 1] ** (d - 1), outbound[n - 1]))
    return RadialBoundaryLaw(q, d, depth, points[0].copy(), inbound, outbound, truncated, note)


def free_law(q: int, d: int, depth: int = DEFAULT_DEPTH) -> RadialBoundaryLaw:
    eq = equidistribution(q)
    return RadialBoundaryLaw(
        q, d, depth, eq.copy(), [None] + [eq.copy() for _ in range(depth)], [eq.copy() for _ in range(depth + 1)]
    )


def law_from_seed(
    fz: FuzzyOperator, d: int, seed, depth: int = DEFAULT_DEPTH, tol: float = 1e-12
) -> RadialBoundaryLaw:
    """Backward orbit from ``seed`` followed by :func:`build`."""
    orbit = backward_orbit(fz, d, seed, depth - 1, tol)
    return build(orbit, d, fz, depth)


def equation_residuals(law: RadialBoundaryLaw, fz: FuzzyOperator) -> np.ndarray:
    """One-norm residuals of the radial equation between consecutive depths.

    Entry ``n-1`` compares ``G_{1/d}(inbound[n])`` with
    ``S_q(G_{1/d}(inbound[n+1]))``.
    """
    d = law.d
    res = []
    for n in range(1, law.depth):
        lhs = hadamard_power(law.inbound[n], 1.0 / d)
        rhs = apply_S(fz, d, hadamard_power(law.inbound[n + 1], 1.0 / d))
        res.append(np.abs(lhs - rhs).sum())
    return np.array(res)


@dataclass
class ConvergenceReport:
    distances: np.ndarray
    rate: Optional[float]
    monotone_tail: bool
    flags: List[str] = field(default_factory=list)


def outbound_convergence(law: RadialBoundaryLaw, floor: float = 1e-14) -> ConvergenceReport:
    """Distances of ``outbound[n]`` to eq and the fitted per-depth contraction factor."""
    if law.depth < 5:
        raise DepthError("convergence diagnostics need depth >= 5")
    eq = equidistribution(law.q)
    dist = np.array([np.linalg.norm(v - eq) for v in law.outbound])
    above = np.nonzero(dist > floor)[0]
    rate = None
    flags = []
    if above.size >= 3:
        # skip the first third as transient
        k = above[above.size // 3 :]
        if k.size >= 2:
            rate = float(math.exp(np.polyfit(k, np.log(dist[k]), 1)[0]))
    tail = dist[dist.size // 2 :]
    tail = tail[tail > floor]
    monotone = bool(np.all(np.diff(tail) <= 0))
    if not monotone:
        flags.append("non-monotone tail")
    return ConvergenceReport(dist, rate, monotone, flags)
