"""Gradient Gibbs measures induced by a radial height-periodic boundary law.

Conventions: an oriented edge ``(x, y)`` carries the increment
``eta = h(y) - h(x)``.  On a :class:`~ggmtree.tree.FiniteSubtree` every
edge is oriented away from the root.  All normalizing constants are exact:
they are computed from the class masses of the true fuzzy operator of
``op``, so no increment box is ever summed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .boundary_law import RadialBoundaryLaw, equation_residuals
from .errors import DepthError, DomainError, PreconditionError, ShapeError
from .simplex_dynamics import as_simplex
from .transfer_ops import FuzzyOperator, TransferOperator, cutoff, evaluate, fuzzy
from .tree import FiniteSubtree, Vertex, children, parent

__all__ = [
    "J_MAX",
    "DEFAULT_TAIL_TOL",
    "IncrementKernel",
    "kernel",
    "EdgeMarginal",
    "edge_marginal",
    "subtree_marginal",
    "subtree_marginal_many",
    "GradientSample",
    "SampleBatch",
    "sample",
    "PathDistribution",
    "path_increment_distribution",
    "ti_scalar",
    "FingerprintResult",
    "period_fingerprint",
]

J_MAX = 10**5
DEFAULT_TAIL_TOL = 1e-12


def _true_fuzzy(op: TransferOperator, fz: FuzzyOperator) -> FuzzyOperator:
    """Fuzzy operator of ``op``, after checking ``fz`` is proportional to it."""
    true = fuzzy(op, fz.q)
    a = fz.values / fz.one_norm
    b = true.values / true.one_norm
    if not np.allclose(a, b, rtol=1e-9, atol=0):
        raise PreconditionError(
            f"fuzzy operator {fz.values.tolist()} is not the q={fz.q} folding of {op.name}"
        )
    return true


@dataclass(frozen=True, eq=False)
class IncrementKernel:
    """``rho(j | r) = Q(j) / Q^q(r)`` for ``j ≡ r (mod q)``, ``|j| <= j_max``."""

    q: int
    j_max: int
    offsets: Tuple[np.ndarray, ...]
    probs: Tuple[np.ndarray, ...]
    tail_mass: np.ndarray

    def prob(self, j: int, r: Optional[int] = None) -> float:
        r = j % self.q if r is None else r % self.q
        if (j - r) % self.q or abs(j) > self.j_max:
            return 0.0
        idx = np.searchsorted(self.offsets[r], j)
        return float(self.probs[r][idx])

    def dense(self, r: int) -> np.ndarray:
        """Class-``r`` probabilities on the full grid ``-j_max..j_max``."""
        out = np.zeros(2 * self.j_max + 1)
        out[self.offsets[r] + self.j_max] = self.probs[r]
        return out

    def draw(self, classes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        classes = np.asarray(classes) % self.q
        out = np.empty(classes.shape, dtype=np.int64)
        u = rng.random(classes.shape)
        for r in range(self.q):
            mask = classes == r
            if not mask.any():
                continue
            cdf = np.cumsum(self.probs[r])
            idx = np.searchsorted(cdf, u[mask] * cdf[-1], side="right")
            out[mask] = self.offsets[r][np.minimum(idx, cdf.size - 1)]
        return out


def _support(op: TransferOperator, tol: float) -> int:
    return cutoff(op, tol, limit=J_MAX)


def kernel(
    op: TransferOperator, fz: FuzzyOperator, tail_tol: float = DEFAULT_TAIL_TOL
) -> IncrementKernel:
    true = _true_fuzzy(op, fz)
    q = true.q
    j_max = _support(op, tail_tol * float(true.values.min()))
    offsets, probs = [], []
    for r in range(q):
        lo = -j_max + ((r + j_max) % q)
        js = np.arange(lo, j_max + 1, q)
        offsets.append(js)
        probs.append(evaluate(op, js) / true.values[r])
    bound = op.tail_bound(j_max)
    tail = np.array([bound / v for v in true.values])
    return IncrementKernel(q, j_max, tuple(offsets), tuple(probs), tail)


@dataclass
class EdgeMarginal:
    """Law of the increment on one oriented edge, truncated to ``|j| <= j_max``."""

    support: np.ndarray
    probs: np.ndarray
    tail_mass: float

    def prob(self, j: int) -> float:
        j_max = int(self.support[-1])
        return float(self.probs[j + j_max]) if abs(j) <= j_max else 0.0

    def to_dict(self) -> dict:
        return {
            "support": self.support.tolist(),
            "probs": self.probs.tolist(),
            "tail_mass": self.tail_mass,
        }


def _class_overlap(lam_xy: np.ndarray, lam_yx: np.ndarray) -> np.ndarray:
    """``c(r) = sum_s lam_xy(s) lam_yx(s + r)``."""
    q = lam_xy.size
    return np.array([np.dot(lam_xy, np.roll(lam_yx, -r)) for r in range(q)])


def edge_marginal(
    op: TransferOperator,
    fz: FuzzyOperator,
    lam_xy,
    lam_yx,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> EdgeMarginal:
    true = _true_fuzzy(op, fz)
    q = true.q
    lam_xy = as_simplex(lam_xy, q, tol=1e-9)
    lam_yx = as_simplex(lam_yx, q, tol=1e-9)
    overlap = _class_overlap(lam_xy, lam_yx)
    z = float(np.dot(overlap, true.values))
    j_max = _support(op, tail_tol * z / overlap.max())
    js = np.arange(-j_max, j_max + 1)
    probs = evaluate(op, js) * overlap[js % q] / z
    tail = min(1.0, op.tail_bound(j_max) * overlap.max() / z)
    return EdgeMarginal(js, probs, tail)


def _boundary_laws(law: RadialBoundaryLaw, subtree: FiniteSubtree) -> np.ndarray:
    """Rows ``lambda_{y, y_inside}`` for the boundary vertices, scaled by ``q``."""
    if law.d != subtree.d:
        raise ShapeError(f"law is for d={law.d}, subtree for d={subtree.d}")
    if subtree.max_depth > law.depth:
        raise DepthError(f"subtree reaches depth {subtree.max_depth} > law depth {law.depth}")
    rows = []
    for y, inside in subtree.boundary:
        if len(y) > len(inside):
            rows.append(law.toward_root(len(y)))
        else:
            rows.append(law.away_from_root(len(y)))
    # scaling by q keeps long products near 1; it cancels against Z
    return law.q * np.array(rows)


def _partition(true: FuzzyOperator, lam: np.ndarray, subtree: FiniteSubtree) -> float:
    """Exact normalizer by sum-product over ``Z_q`` heights on ``Λ ∪ ∂Λ``."""
    C = true.matrix()
    pos = {b[0]: i for i, b in enumerate(subtree.boundary)}
    msg: Dict[Vertex, np.ndarray] = {}
    for v in reversed(subtree.vertices):
        m = np.ones(true.q)
        for c in children(v, subtree.d):
            m = m * (C @ (msg[c] if c in subtree else lam[pos[c]]))
        msg[v] = m
    top = subtree.top
    m = msg[top]
    if top:
        m = m * (C @ lam[pos[parent(top)]])
    return float(m.sum())


def subtree_marginal_many(
    op: TransferOperator,
    fz: FuzzyOperator,
    law: RadialBoundaryLaw,
    subtree: FiniteSubtree,
    zetas,
) -> np.ndarray:
    """Probabilities of many increment assignments (rows in edge order)."""
    true = _true_fuzzy(op, fz)
    q = true.q
    if law.q != q:
        raise ShapeError(f"law has q={law.q}, fuzzy operator q={q}")
    lam = _boundary_laws(law, subtree)
    zetas = np.atleast_2d(subtree.zeta_vector(zetas))
    z = _partition(true, lam, subtree)
    classes = (zetas @ subtree.incidence.T) % q
    rows = np.arange(lam.shape[0])
    total = np.zeros(zetas.shape[0])
    for s in range(q):
        total += np.prod(lam[rows, (s + classes) % q], axis=1)
    weights = np.prod(evaluate(op, zetas), axis=1)
    return total * weights / z


def subtree_marginal(
    op: TransferOperator,
    fz: FuzzyOperator,
    law: RadialBoundaryLaw,
    subtree: FiniteSubtree,
    zeta,
) -> float:
    """Probability that the increments on all edges touching ``Λ`` equal ``zeta``."""
    return float(subtree_marginal_many(op, fz, law, subtree, [subtree.zeta_vector(zeta)])[0])


@dataclass
class GradientSample:
    """One gradient configuration on the edges of a subtree."""

    subtree: FiniteSubtree
    values: np.ndarray
    seed: Optional[int] = None

    @property
    def increments(self) -> Dict[Vertex, int]:
        return {e.child: int(v) for e, v in zip(self.subtree.edges, self.values)}

    def increment(self, x: Vertex, y: Vertex) -> int:
        """``h(y) - h(x)`` for adjacent ``x, y``; antisymmetric by construction."""
        x, y = tuple(x), tuple(y)
        if len(y) == len(x) + 1 and y[:-1] == x:
            return int(self.values[self.subtree.edge_index[y]])
        if len(x) == len(y) + 1 and x[:-1] == y:
            return -int(self.values[self.subtree.edge_index[x]])
        raise DomainError(f"{x} and {y} are not adjacent")


@dataclass
class SampleBatch:
    subtree: FiniteSubtree
    increments: np.ndarray  # (n_samples, n_edges)
    seed: Optional[int]

    def __len__(self):
        return self.increments.shape[0]

    def __getitem__(self, i) -> GradientSample:
        return GradientSample(self.subtree, self.increments[i], self.seed)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample", "parent", "child", "increment"])
        names = [(_name(e.parent), _name(e.child)) for e in self.subtree.edges]
        for i, row in enumerate(self.increments):
            for (p, c), v in zip(names, row):
                w.writerow([i, p, c, int(v)])
        return buf.getvalue()


def _name(v: Vertex) -> str:
    return "root" if not v else ".".join(str(c) for c in v)


def _transition(C: np.ndarray, lam: np.ndarray) -> np.ndarray:
    t = C * lam[None, :]
    return t / t.sum(axis=1, keepdims=True)


def _draw_rows(cdf: np.ndarray, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(state.shape[0])
    return np.minimum((u[:, None] > cdf[state]).sum(axis=1), cdf.shape[1] - 1)


def _site_weights(true: FuzzyOperator, law: RadialBoundaryLaw, v: Vertex) -> np.ndarray:
    """Single-site law of the ``Z_q`` height at ``v`` from its ``d+1`` incoming values."""
    C = true.matrix()
    w = np.ones(true.q)
    for c in children(v, law.d):
        w = w * (C @ (law.q * law.toward_root(len(c))))
    if v:
        w = w * (C @ (law.q * law.away_from_root(len(v) - 1)))
    return w / w.sum()


def sample(
    op: TransferOperator,
    fz: FuzzyOperator,
    law: RadialBoundaryLaw,
    subtree: FiniteSubtree,
    n_samples: int,
    rng_seed: Optional[int] = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> SampleBatch:
    """Draw gradient configurations on the edges touching ``subtree``.

    First a ``Z_q``-valued tree-indexed Markov chain is sampled from the top
    vertex outward, then each edge increment is drawn from the increment
    kernel given its class.
    """
    true = _true_fuzzy(op, fz)
    if law.q != true.q:
        raise ShapeError(f"law has q={law.q}, fuzzy operator q={true.q}")
    _boundary_laws(law, subtree)
    rng = np.random.default_rng(rng_seed)
    ker = kernel(op, fz, tail_tol / max(subtree.n_edges, 1))
    C = true.matrix()
    n = int(n_samples)
    heights: Dict[Vertex, np.ndarray] = {}
    top = subtree.top
    root_cdf = np.cumsum(_site_weights(true, law, top))
    heights[top] = np.minimum(
        np.searchsorted(root_cdf, rng.random(n) * root_cdf[-1], side="right"), true.q - 1
    )
    classes = np.empty((n, subtree.n_edges), dtype=np.int64)
    for i, e in enumerate(subtree.edges):
        if e.kind == "up":
            src, dst = top, e.parent
            lam = law.away_from_root(len(dst))
        else:
            src, dst = e.parent, e.child
            lam = law.toward_root(len(dst))
        cdf = np.cumsum(_transition(C, lam), axis=1)
        heights[dst] = _draw_rows(cdf, heights[src], rng)
        classes[:, i] = heights[e.child] - heights[e.parent]
    return SampleBatch(subtree, ker.draw(classes, rng), rng_seed)


@dataclass
class PathDistribution:
    """Law of the total increment ``W_n`` along a ray of ``n`` edges from the root."""

    n: int
    offset: int
    probs: np.ndarray
    tail_mass: float

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.probs.size)

    def prob(self, k: int) -> float:
        i = k - self.offset
        return float(self.probs[i]) if 0 <= i < self.probs.size else 0.0

    @property
    def max_prob(self) -> float:
        return float(self.probs.max())

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "support": self.support.tolist(),
            "probs": self.probs.tolist(),
            "tail_mass": self.tail_mass,
        }


def path_increment_distribution(
    op: TransferOperator,
    fz: FuzzyOperator,
    law: RadialBoundaryLaw,
    n: int,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> PathDistribution:
    """Exact dynamic program over (height class, accumulated increment)."""
    if n < 1:
        raise DomainError("path length must be at least 1")
    if n > law.depth:
        raise DepthError(f"path of length {n} exceeds law depth {law.depth}")
    true = _true_fuzzy(op, fz)
    q = true.q
    ker = kernel(op, fz, tail_tol / n)
    j = ker.j_max
    rho = [ker.dense(r) for r in range(q)]
    C = true.matrix()
    # dist[i] holds the joint law of (class i at the current vertex, W) on -k*j..k*j
    dist = _site_weights(true, law, ())[:, None].copy()
    for k in range(1, n + 1):
        T = _transition(C, law.toward_root(k))
        new = np.zeros((q, dist.shape[1] + 2 * j))
        for a in range(q):
            for b in range(q):
                new[b] += T[a, b] * np.convolve(dist[a], rho[(b - a) % q])
        dist = new
    probs = dist.sum(axis=0)
    return PathDistribution(n, -n * j, probs, max(0.0, 1.0 - float(probs.sum())))


@dataclass(frozen=True)
class TIScore:
    value: float
    shift: int
    inner_products: Tuple[float, ...]


def ti_scalar(fz: FuzzyOperator, u, d: int) -> TIScore:
    """Largest ``|<(Q^q u^d)^d, (T_j u)^d - u^d>|`` over cyclic shifts ``j``.

    A strictly positive value certifies that the gradient measure built from
    the boundary law with seed ``u`` is not translation invariant.
    """
    u = as_simplex(u, fz.q, tol=1e-9)
    left = fz.apply(u**d) ** d
    ud = u**d
    inner = tuple(float(np.dot(left, np.roll(u, -j) ** d - ud)) for j in range(fz.q))
    shift = int(np.argmax(np.abs(inner)))
    return TIScore(abs(inner[shift]), shift, inner)


@dataclass
class FingerprintResult:
    verdict: str
    shift: Optional[int]
    fingerprint_s: np.ndarray
    fingerprint_t: np.ndarray


def _fingerprint(law: RadialBoundaryLaw) -> np.ndarray:
    a, b = law.toward_root(1), law.away_from_root(0)
    return np.array([np.dot(a, np.roll(b, -j)) for j in range(law.q)])


def period_fingerprint(
    fz_st: FuzzyOperator,
    law_s: RadialBoundaryLaw,
    law_t: RadialBoundaryLaw,
    rtol: float = 1e-9,
) -> FingerprintResult:
    """Tell apart two laws of coprime periods after lifting both to period ``s*t``.

    The fingerprint ``f(j) = <lambda_in[1], T_j lambda_out[0]>`` is computed
    for both lifted laws; a shift ``j`` where the two are not proportional
    shows the induced gradient measures differ.
    """
    s, t = law_s.q, law_t.q
    if math.gcd(s, t) != 1:
        raise PreconditionError(f"periods {s} and {t} are not coprime")
    if fz_st.q != s * t:
        raise ShapeError(f"fuzzy operator has q={fz_st.q}, expected {s * t}")
    lifted_s, lifted_t = law_s.periodic_extension(t), law_t.periodic_extension(s)
    for law in (lifted_s, lifted_t):
        probe = _prefix(law, 8)
        res = equation_residuals(probe, fz_st)
        if res.size and res.max() > 1e-9:
            raise PreconditionError("lifted law is not a boundary law for the given fuzzy operator")
    fs, ft = _fingerprint(lifted_s), _fingerprint(lifted_t)
    ratio = fs / ft
    bad = np.nonzero(np.abs(ratio - ratio[0]) > rtol * abs(ratio[0]))[0]
    if bad.size:
        return FingerprintResult("distinguishable", int(bad[0]), fs, ft)
    return FingerprintResult("indistinguishable", None, fs, ft)


def _prefix(law: RadialBoundaryLaw, depth: int) -> RadialBoundaryLaw:
    depth = min(depth, law.depth)
    return RadialBoundaryLaw(
        law.q, law.d, depth, law.seed, law.inbound[: depth + 1], law.outbound[: depth + 1]
    )


def to_json(obj, **kwargs) -> str:
    return json.dumps(obj.to_dict(), **kwargs)
