"""The map S_q on the probability simplex and its pseudo-unstable manifold.

``S_q(u) = Q^q u^d / (|Q^q|_1 |u^d|_1)`` where powers are taken
componentwise.  The equidistribution ``eq = (1/q, ..., 1/q)`` is always a
fixed point and ``DS_q[eq] = d Q^q / |Q^q|_1`` on the tangent space, so its
eigenvalues are ``d Qhat(2 pi j / q) / Qhat(0)``.

Vectors are plain numpy arrays.  Points of the simplex have strictly
positive entries summing to one; tangent vectors sum to zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import (
    BoundaryError,
    ConfigError,
    DomainError,
    NoGapError,
    NumericalError,
    SeedError,
    ShapeError,
    StepSizeError,
)
from .transfer_ops import FuzzyOperator, TransferOperator, fold_frequency, fourier

__all__ = [
    "equidistribution",
    "as_simplex",
    "hadamard_power",
    "apply_S",
    "jacobian_S",
    "tangent_basis",
    "Eigenvalue",
    "SpectrumReport",
    "spectrum_at_eq",
    "TangentMap",
    "jacobian_fd",
    "unstable_subspace",
    "eps_max",
    "seed_on_manifold",
    "BackwardOrbit",
    "backward_orbit",
    "manifold_orbit",
]

NEUTRAL_TOL = 1e-9
GAP_TOL = 1e-9
NEWTON_MAX_ITER = 50


def equidistribution(q: int) -> np.ndarray:
    return np.full(int(q), 1.0 / q)


def as_simplex(u, q: Optional[int] = None, tol: float = 1e-12) -> np.ndarray:
    """Validate an interior point of the simplex and return it as an array."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ShapeError("simplex vector must be one-dimensional")
    if q is not None and u.shape[0] != q:
        raise ShapeError(f"simplex vector has length {u.shape[0]}, expected {q}")
    if np.any(~np.isfinite(u)) or np.any(u <= 0):
        raise DomainError("simplex vector must have strictly positive entries")
    if abs(u.sum() - 1.0) > tol:
        raise DomainError(f"simplex vector entries sum to {u.sum():.15g}, not 1")
    return u


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.sum(v)


def hadamard_power(v, s: float) -> np.ndarray:
    """``G_s(v) = v^s / |v^s|_1``; ``G_{1/s}`` is its inverse."""
    if s == 0:
        raise DomainError("Hadamard power needs s != 0")
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise DomainError("Hadamard power needs strictly positive entries")
    # rescale by the maximum first so large powers do not underflow
    return _normalize((v / v.max()) ** s)


def apply_S(fz: FuzzyOperator, d: int, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (fz.q,):
        raise ShapeError(f"point of length {u.shape[0]} does not match q={fz.q}")
    return fz.apply(hadamard_power(u, d)) / fz.one_norm


def jacobian_S(fz: FuzzyOperator, d: int, u) -> np.ndarray:
    """Ambient Jacobian of ``S_q`` at ``u`` (``q x q``), from the chain rule."""
    u = np.asarray(u, dtype=float)
    ud = u**d
    n = ud.sum()
    dG = d / n * (np.diag(u ** (d - 1)) - np.outer(ud, u ** (d - 1)) / n)
    return fz.matrix() @ dG / fz.one_norm


def tangent_basis(q: int):
    """Orthonormal real Fourier basis of the tangent space.

    Returns ``(B, labels)`` with ``B`` of shape ``(q, q-1)`` and labels
    ``(j, "cos" | "sin")`` ordered by ascending ``j``, cosine before sine.
    """
    r = np.arange(q)
    cols, labels = [], []
    for j in range(1, q // 2 + 1):
        if 2 * j == q:
            cols.append(np.cos(np.pi * r) / math.sqrt(q))
            labels.append((j, "cos"))
        else:
            cols.append(math.sqrt(2.0 / q) * np.cos(2 * np.pi * j * r / q))
            labels.append((j, "cos"))
            cols.append(math.sqrt(2.0 / q) * np.sin(2 * np.pi * j * r / q))
            labels.append((j, "sin"))
    return np.column_stack(cols), labels


@dataclass(frozen=True)
class Eigenvalue:
    j: int
    value: float
    multiplicity: int


@dataclass
class SpectrumReport:
    """Eigenvalues of ``DS_q[eq]`` with their tau-gap classification."""

    q: int
    d: int
    eigenvalues: List[Eigenvalue]
    tau: Optional[float]
    unstable_dim: int
    neutral_indices: List[int]
    fourier_ratio: List[float] = field(default_factory=list)

    def classify(self, j: int) -> str:
        ev = self.eigenvalues[j - 1]
        if abs(abs(ev.value) - 1.0) <= NEUTRAL_TOL:
            return "neutral"
        if self.tau is not None and abs(ev.value) > self.tau:
            return "unstable"
        return "stable"

    @property
    def unstable_indices(self) -> List[int]:
        return [ev.j for ev in self.eigenvalues if self.tau is not None and abs(ev.value) > self.tau]

    @property
    def has_gap(self) -> bool:
        return self.tau is not None

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "d": self.d,
            "tau": self.tau,
            "unstable_dim": self.unstable_dim,
            "neutral_indices": list(self.neutral_indices),
            "eigenvalues": [
                {
                    "j": ev.j,
                    "k": 2 * math.pi * ev.j / self.q,
                    "ratio": self.fourier_ratio[ev.j - 1],
                    "value": ev.value,
                    "multiplicity": ev.multiplicity,
                    "class": self.classify(ev.j),
                }
                for ev in self.eigenvalues
            ],
        }


def _select_tau(moduli: Sequence[float]):
    above = [m for m in moduli if m > 1.0 + NEUTRAL_TOL]
    if not above:
        return None
    below = [m for m in moduli if m <= 1.0 + NEUTRAL_TOL] + [1.0]
    lo, hi = max(below), min(above)
    if hi - lo < GAP_TOL:
        return None
    return math.sqrt(lo * hi)


def spectrum_at_eq(
    fz: FuzzyOperator, d: int, op: Optional[TransferOperator] = None
) -> SpectrumReport:
    """Spectrum of ``DS_q[eq]``.

    With ``op`` the eigenvalues use the Fourier transform of ``Q`` directly;
    without it they are the circulant eigenvalues of ``fz`` (which differ
    only by rounding when ``fz = fuzzy(op, q)``).
    """
    q = fz.q
    if op is not None:
        base = fourier(op, 0.0)
        ratios = [fourier(op, fold_frequency(2 * math.pi * j / q)) / base for j in range(1, q // 2 + 1)]
    else:
        ratios = [fz.eigenvalue(j) / fz.one_norm for j in range(1, q // 2 + 1)]
    eigs = [
        Eigenvalue(j, d * r, 1 if 2 * j == q else 2) for j, r in enumerate(ratios, start=1)
    ]
    tau = _select_tau([abs(e.value) for e in eigs])
    neutral = [e.j for e in eigs if abs(abs(e.value) - 1.0) <= NEUTRAL_TOL]
    unstable_dim = sum(e.multiplicity for e in eigs if tau is not None and abs(e.value) > tau)
    return SpectrumReport(q, d, eigs, tau, unstable_dim, neutral, ratios)


@dataclass
class TangentMap:
    """A linear map on the tangent space in the orthonormal Fourier basis."""

    basis: np.ndarray
    matrix: np.ndarray

    @property
    def ambient(self) -> np.ndarray:
        """``q x q`` representation ``B M B^T``; it annihilates constants."""
        return self.basis @ self.matrix @ self.basis.T

    def eigenvalues(self) -> np.ndarray:
        ev = np.linalg.eigvals(self.matrix)
        return np.sort_complex(ev)


def jacobian_fd(fz: FuzzyOperator, d: int, u, h: float = 1e-6) -> TangentMap:
    """Central-difference derivative of ``S_q`` at ``u`` on the tangent space."""
    if not 1e-8 <= h <= 1e-4:
        raise DomainError(f"finite-difference step {h} outside [1e-8, 1e-4]")
    u = as_simplex(u, fz.q)
    basis, _ = tangent_basis(fz.q)
    cols = []
    for i in range(basis.shape[1]):
        up, dn = u + h * basis[:, i], u - h * basis[:, i]
        if np.any(up <= 0) or np.any(dn <= 0):
            raise StepSizeError(f"step h={h} leaves the interior of the simplex")
        cols.append((apply_S(fz, d, up) - apply_S(fz, d, dn)) / (2 * h))
    return TangentMap(basis, basis.T @ np.column_stack(cols))


def unstable_subspace(report: SpectrumReport) -> List[np.ndarray]:
    """Orthonormal cosine/sine modes spanning the strictly expanding subspace."""
    if report.tau is None or report.unstable_dim == 0:
        raise NoGapError(
            f"non-hyperbolic without gap at q={report.q}, d={report.d}; "
            f"neutral indices {report.neutral_indices}",
            report.neutral_indices,
        )
    basis, labels = tangent_basis(report.q)
    keep = set(report.unstable_indices)
    return [basis[:, i] for i, (j, _) in enumerate(labels) if j in keep]


def eps_max(q: int) -> float:
    return 0.1 / math.sqrt(q)


def seed_on_manifold(
    report: SpectrumReport, modes: Sequence[np.ndarray], eps: float, coeffs=None
) -> np.ndarray:
    """Point ``eq + eps * sum_i coeffs_i mode_i`` of the linear unstable chart.

    ``coeffs`` defaults to the first mode.  Values of ``eps`` above
    :func:`eps_max` are allowed but warned about, since the neglected
    curvature of the manifold is then no longer small.
    """
    q = report.q
    modes = [np.asarray(m, dtype=float) for m in modes]
    if coeffs is None:
        coeffs = np.zeros(len(modes))
        coeffs[0] = 1.0
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (len(modes),):
        raise ShapeError(f"{coeffs.size} coefficients for {len(modes)} unstable modes")
    norm = np.linalg.norm(coeffs)
    if not abs(norm - 1.0) < 1e-12:
        raise ConfigError(f"coefficients must form a unit vector (norm {norm})")
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    if eps > eps_max(q):
        warnings.warn(
            f"eps={eps} exceeds eps_max={eps_max(q):.4g}; the linear chart is coarse here",
            stacklevel=2,
        )
    u = equidistribution(q)
    for c, m in zip(coeffs, modes):
        u = u + eps * c * m
    if np.any(u <= 0):
        raise SeedError(f"eps={eps} puts the seed outside the simplex (min entry {u.min():.3g})")
    return _normalize(u)


@dataclass
class BackwardOrbit:
    """Points ``u, S^-1 u, S^-2 u, ...`` with per-step inversion residuals."""

    points: List[np.ndarray]
    residuals: List[float]
    rate_estimate: Optional[float]
    complete: bool = True
    diagnostic: str = ""

    def distances(self) -> np.ndarray:
        q = self.points[0].shape[0]
        eq = equidistribution(q)
        return np.array([np.linalg.norm(p - eq) for p in self.points])

    def __len__(self):
        return len(self.points)


def _fit_rate(dist: np.ndarray, floor: float = 1e-12) -> Optional[float]:
    """Per-step factor by which the distance to eq shrinks (log-linear fit)."""
    idx = np.nonzero(dist > floor)[0]
    if idx.size < 2:
        return None
    # contiguous head of the orbit above the floor
    stop = idx[0]
    while stop + 1 < dist.size and dist[stop + 1] > floor:
        stop += 1
    k = np.arange(idx[0], stop + 1)
    if k.size < 2:
        return None
    slope = np.polyfit(k, np.log(dist[k]), 1)[0]
    return float(math.exp(-slope))


def _linear_inverse_guess(fz: FuzzyOperator, d: int, target: np.ndarray) -> np.ndarray:
    q = fz.q
    eq = equidistribution(q)
    basis, labels = tangent_basis(q)
    mu = np.array([d * fz.eigenvalue(j) / fz.one_norm for j, _ in labels])
    coords = basis.T @ (target - eq)
    inv = np.where(np.abs(mu) > 1.0, coords / np.where(mu == 0, 1, mu), coords)
    guess = eq + basis @ inv
    t = 1.0
    while np.any(guess <= 0):
        t *= 0.5
        guess = eq + t * (basis @ inv)
    return guess


def _preimage(fz: FuzzyOperator, d: int, target: np.ndarray, tol: float):
    """Damped Newton for ``S(x) = target`` in the first ``q-1`` coordinates."""
    q = fz.q
    x = _linear_inverse_guess(fz, d, target)
    lift = np.vstack([np.eye(q - 1), -np.ones((1, q - 1))])

    def residual(v):
        return apply_S(fz, d, v) - target

    res = residual(x)
    rnorm = np.abs(res).sum()
    for _ in range(NEWTON_MAX_ITER):
        if rnorm < tol:
            return x, rnorm, True
        jac = (jacobian_S(fz, d, x) @ lift)[: q - 1]
        try:
            step = np.linalg.solve(jac, -res[: q - 1])
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular Jacobian in backward step") from exc
        full = lift @ step
        t = 1.0
        while True:
            cand = x + t * full
            if np.all(cand > 0):
                cres = residual(cand)
                cnorm = np.abs(cres).sum()
                if cnorm < rnorm:
                    break
            t *= 0.5
            if t < 1e-12:
                if np.any(x + full <= 0):
                    raise BoundaryError("preimage drifts out of the interior of the simplex")
                return x, rnorm, False
        x, res, rnorm = cand, cres, cnorm
    return x, rnorm, rnorm < tol


def backward_orbit(
    fz: FuzzyOperator, d: int, u0, n_steps: int, tol: float = 1e-12
) -> BackwardOrbit:
    """Iterate ``S_q^{-1}`` from ``u0`` by Newton's method, one step at a time.

    Each preimage is solved to a one-norm residual below ``tol``.  If Newton
    stalls the orbit is returned truncated with ``complete=False``.  A
    preimage outside the simplex raises :class:`BoundaryError`, with the
    partial orbit attached as ``exc.orbit``.
    """
    u0 = as_simplex(u0, fz.q, tol=1e-10)
    u0 = _normalize(u0)
    points, residuals = [u0], []
    diagnostic = ""
    complete = True
    for step in range(n_steps):
        try:
            x, rnorm, ok = _preimage(fz, d, points[-1], tol)
        except BoundaryError as exc:
            exc.orbit = BackwardOrbit(points, residuals, _fit_rate(_dist(points)), False, str(exc))
            raise
        if not ok:
            complete = False
            diagnostic = f"Newton stalled at step {step + 1} with residual {rnorm:.3e}"
            break
        points.append(x)
        residuals.append(float(rnorm))
    return BackwardOrbit(points, residuals, _fit_rate(_dist(points)), complete, diagnostic)


def _dist(points) -> np.ndarray:
    eq = equidistribution(points[0].shape[0])
    return np.array([np.linalg.norm(p - eq) for p in points])


def manifold_orbit(
    fz: FuzzyOperator,
    d: int,
    report: SpectrumReport,
    eps: float,
    coeffs=None,
    n_steps: int = 64,
    tol: float = 1e-13,
) -> BackwardOrbit:
    """Backward orbit lying on the pseudo-unstable manifold.

    Solves for the whole orbit segment at once:
    ``S(p[k+1]) = p[k]`` for ``k < n_steps``, the unstable Fourier
    coordinates of ``p[0]`` fixed to ``eps * coeffs`` and the remaining
    coordinates of ``p[n_steps]`` set to zero.  The stable coordinates of
    ``p[0]`` come out of the solve and are the curvature of the manifold
    that the linear chart neglects.  Unlike :func:`backward_orbit` this
    stays accurate when ``DS_q[eq]`` has contracting modes, which make
    stepwise backward iteration unstable.
    """
    q = fz.q
    if report.q != q:
        raise ShapeError("spectrum report and fuzzy operator have different q")
    if report.tau is None or report.unstable_dim == 0:
        raise NoGapError(
            f"non-hyperbolic without gap at q={q}; neutral indices {report.neutral_indices}",
            report.neutral_indices,
        )
    basis, labels = tangent_basis(q)
    unstable = [i for i, (j, _) in enumerate(labels) if j in set(report.unstable_indices)]
    stable = [i for i in range(q - 1) if i not in unstable]
    if coeffs is None:
        coeffs = np.zeros(len(unstable))
        coeffs[0] = 1.0
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (len(unstable),) or abs(np.linalg.norm(coeffs) - 1.0) > 1e-12:
        raise ConfigError("coeffs must be a unit vector over the unstable modes")
    eq = equidistribution(q)
    m = q - 1
    n = int(n_steps)
    mu = np.array([d * fz.eigenvalue(j) / fz.one_norm for j, _ in labels])

    c = np.zeros((n + 1, m))
    for k in range(n + 1):
        c[k, unstable] = eps * coeffs / mu[unstable] ** k

    def unpack(cc):
        return [eq + basis @ cc[k] for k in range(n + 1)]

    def system(cc):
        pts = unpack(cc)
        if any(np.any(p <= 0) for p in pts):
            return None
        f = np.empty((n + 1) * m)
        for k in range(n):
            f[k * m : (k + 1) * m] = basis.T @ (apply_S(fz, d, pts[k + 1]) - pts[k])
        tail = np.empty(m)
        tail[: len(unstable)] = cc[0, unstable] - eps * coeffs
        tail[len(unstable) :] = cc[n, stable]
        f[n * m :] = tail
        return f

    def jacobian(cc):
        pts = unpack(cc)
        size = (n + 1) * m
        jac = np.zeros((size, size))
        for k in range(n):
            rows = slice(k * m, (k + 1) * m)
            jac[rows, k * m : (k + 1) * m] = -np.eye(m)
            jac[rows, (k + 1) * m : (k + 2) * m] = basis.T @ jacobian_S(fz, d, pts[k + 1]) @ basis
        for r, i in enumerate(unstable):
            jac[n * m + r, i] = 1.0
        for r, i in enumerate(stable):
            jac[n * m + len(unstable) + r, n * m + i] = 1.0
        return jac

    f = system(c)
    if f is None:
        raise SeedError(f"eps={eps} puts the linear orbit guess outside the simplex")
    fnorm = np.abs(f).max()
    converged = fnorm < tol
    for _ in range(NEWTON_MAX_ITER):
        if converged:
            break
        step = np.linalg.solve(jacobian(c), -f).reshape(n + 1, m)
        t = 1.0
        while t > 1e-10:
            cand = c + t * step
            fc = system(cand)
            if fc is not None and np.abs(fc).max() < fnorm:
                break
            t *= 0.5
        else:
            break
        c, f, fnorm = cand, fc, np.abs(fc).max()
        converged = fnorm < tol
    points = [_normalize(p) for p in unpack(c)]
    residuals = [float(np.abs(apply_S(fz, d, points[k + 1]) - points[k]).sum()) for k in range(n)]
    diag = "" if converged else f"manifold solve stopped at residual {fnorm:.3e}"
    return BackwardOrbit(points, residuals, _fit_rate(_dist(points)), converged, diag)
