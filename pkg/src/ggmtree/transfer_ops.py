"""Transfer operators on the integers, their Fourier transforms and fuzzy operators.

A transfer operator is a strictly positive, even, summable function ``Q`` on
the integers, ``Q(j) = exp(-beta * U(j))``.  Two models have closed forms:

* SOS: ``Q(j) = exp(-beta |j|)``
* inverse square: ``Q(0) = 1`` and ``Q(j) = a / j**2`` otherwise

Custom operators are given as a finite table of values at offsets
``0..L`` together with a tail rule describing ``Q`` beyond ``L``.

The fuzzy operator of period ``q`` is the periodization
``Q^q(i) = sum_j Q(i + q j)``; it acts on ``R^q`` as a symmetric circulant
matrix whose eigenvalues are ``Qhat(2 pi j / q)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.linalg import circulant

from .errors import (
    ConfigError,
    DomainError,
    ShapeError,
    TruncationError,
    UnsupportedOffset,
)

__all__ = [
    "TailRule",
    "TransferOperator",
    "FuzzyOperator",
    "evaluate",
    "fourier",
    "fourier_direct",
    "fold_frequency",
    "fuzzy",
    "hurwitz_zeta2",
    "cutoff",
    "load_custom_table",
    "parse_custom_table",
]

MAX_CUTOFF = 10**7
_HURWITZ_TERMS = 2048


@dataclass(frozen=True)
class TailRule:
    """Values of a custom operator beyond the last tabulated offset ``L``.

    ``geometric r``: ``Q(j) = Q(L) r**(j - L)`` for ``j > L``, ``0 < r < 1``.
    ``power alpha c``: ``Q(j) = c j**(-alpha)`` for ``j > L``, ``alpha > 1``.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind == "geometric":
            (r,) = self.params
            if not 0.0 < r < 1.0:
                raise ConfigError(f"geometric tail ratio must lie in (0, 1), got {r}")
        elif self.kind == "power":
            alpha, c = self.params
            if not alpha > 1.0:
                raise ConfigError(f"power tail needs alpha > 1 for summability, got {alpha}")
            if not c > 0.0:
                raise ConfigError(f"power tail prefactor must be positive, got {c}")
        else:
            raise ConfigError(f"unknown tail rule {self.kind!r}")

    def values(self, j: np.ndarray, last: int, last_value: float) -> np.ndarray:
        j = np.asarray(j, dtype=float)
        if self.kind == "geometric":
            return last_value * self.params[0] ** (j - last)
        alpha, c = self.params
        return c * j ** (-alpha)

    def one_sided_bound(self, n: int, last: int, last_value: float) -> float:
        """Upper bound on ``sum_{j > n} Q(j)`` for ``n >= last``."""
        if self.kind == "geometric":
            r = self.params[0]
            return last_value * r ** (n + 1 - last) / (1.0 - r)
        alpha, c = self.params
        if n < 1:
            n = 1
            extra = c
        else:
            extra = 0.0
        return extra + c * n ** (1.0 - alpha) / (alpha - 1.0)

    def __str__(self):
        return " ".join([self.kind, *(repr(float(p)) for p in self.params)])


@dataclass(frozen=True, eq=False)
class TransferOperator:
    """A summable, strictly positive, even function on the integers.

    Construct with :meth:`sos`, :meth:`inverse_square` or :meth:`custom`.
    """

    model: str
    beta: Optional[float] = None
    a: Optional[float] = None
    table: tuple = ()
    tail: Optional[TailRule] = None
    summation_tol: float = 1e-12
    _explicit_tail_bound: Optional[Callable[[int], float]] = field(default=None, repr=False)

    @classmethod
    def sos(cls, beta: float, summation_tol: float = 1e-12) -> "TransferOperator":
        if not beta > 0:
            raise ConfigError(f"SOS needs beta > 0, got {beta}")
        return cls("sos", beta=float(beta), summation_tol=summation_tol)

    @classmethod
    def inverse_square(cls, a: float, summation_tol: float = 1e-12) -> "TransferOperator":
        if not a > 0:
            raise ConfigError(f"inverse square model needs a > 0, got {a}")
        return cls("invsq", a=float(a), summation_tol=summation_tol)

    @classmethod
    def custom(
        cls,
        table: Mapping[int, float] | Sequence[float],
        tail: Optional[TailRule] = None,
        tail_bound: Optional[Callable[[int], float]] = None,
        summation_tol: float = 1e-12,
    ) -> "TransferOperator":
        """Custom operator from values at offsets ``0..L``.

        ``table`` is either a sequence indexed by offset or a mapping with the
        contiguous keys ``0..L``.  Negative offsets follow by symmetry.
        ``tail_bound(N)`` may override the bound on ``sum_{|j|>N} Q(j)``
        derived from the tail rule.
        """
        if isinstance(table, Mapping):
            keys = sorted(int(k) for k in table)
            if keys != list(range(len(keys))):
                raise ConfigError("custom table offsets must be the contiguous range 0..L")
            values = tuple(float(table[k]) for k in keys)
        else:
            values = tuple(float(v) for v in table)
        if not values:
            raise ConfigError("custom table is empty")
        if min(values) <= 0 or not all(math.isfinite(v) for v in values):
            raise ConfigError("custom table values must be finite and strictly positive")
        return cls(
            "custom",
            table=values,
            tail=tail,
            summation_tol=summation_tol,
            _explicit_tail_bound=tail_bound,
        )

    @property
    def name(self) -> str:
        if self.model == "sos":
            return f"SOS(beta={self.beta!r})"
        if self.model == "invsq":
            return f"InverseSquare(a={self.a!r})"
        return f"Custom(L={len(self.table) - 1}, tail={self.tail})"

    def params(self) -> dict:
        if self.model == "sos":
            return {"beta": self.beta}
        if self.model == "invsq":
            return {"a": self.a}
        return {"table": list(self.table), "tail": str(self.tail) if self.tail else None}

    def __call__(self, j):
        return evaluate(self, j)

    def tail_bound(self, n: int) -> Optional[float]:
        """Upper bound on ``sum_{|j| > n} Q(j)``, or None if unknown."""
        n = int(n)
        if n < 0:
            raise DomainError("tail bound needs n >= 0")
        if self.model == "sos":
            x = math.exp(-self.beta)
            return 2.0 * x ** (n + 1) / (1.0 - x)
        if self.model == "invsq":
            # sum_{j>n} 1/j^2 < 1/n, and = pi^2/6 for n = 0
            return 2.0 * self.a * (math.pi**2 / 6 if n == 0 else 1.0 / n)
        if self._explicit_tail_bound is not None:
            return float(self._explicit_tail_bound(n))
        if self.tail is None:
            return None
        last = len(self.table) - 1
        if n >= last:
            return 2.0 * self.tail.one_sided_bound(n, last, self.table[-1])
        inner = sum(self.table[n + 1 :])
        return 2.0 * (inner + self.tail.one_sided_bound(last, last, self.table[-1]))

    def reachable(self, j) -> bool:
        return self.model != "custom" or self.tail is not None or abs(int(j)) < len(self.table)


def evaluate(op: TransferOperator, j):
    """Return ``Q(j)`` for an integer or an integer array ``j``."""
    scalar = np.ndim(j) == 0
    jj = np.abs(np.asarray(j, dtype=np.int64))
    if op.model == "sos":
        out = np.exp(-op.beta * jj.astype(float))
    elif op.model == "invsq":
        safe = np.where(jj == 0, 1, jj).astype(float)
        out = np.where(jj == 0, 1.0, op.a / safe**2)
    else:
        last = len(op.table) - 1
        inside = jj <= last
        if not np.all(inside) and op.tail is None:
            bad = int(jj[~inside].flat[0])
            raise UnsupportedOffset(
                f"unsupported offset {bad}: custom table ends at {last} and has no tail rule"
            )
        tab = np.asarray(op.table)
        out = np.empty(jj.shape, dtype=float)
        out[inside] = tab[jj[inside]]
        if not np.all(inside):
            out[~inside] = op.tail.values(jj[~inside], last, op.table[-1])
    return float(out) if scalar else out


def cutoff(op: TransferOperator, tol: Optional[float] = None, limit: int = MAX_CUTOFF) -> int:
    """Smallest ``N`` with ``sum_{|j|>N} Q(j) < tol``."""
    tol = op.summation_tol if tol is None else tol
    if not tol > 0:
        raise ConfigError("tolerance must be positive")
    if op.tail_bound(0) is None:
        raise ConfigError(f"{op.name} has no tail bound; the lattice sum is not controlled")
    if op.model == "sos":
        x = math.exp(-op.beta)
        # 2 x^(N+1) / (1-x) < tol
        n = math.ceil(math.log(tol * (1 - x) / 2.0) / math.log(x) - 1.0)
        n = max(n, 0)
        while op.tail_bound(n) >= tol:
            n += 1
        return n
    lo, hi = 0, 1
    while op.tail_bound(hi) >= tol:
        lo, hi = hi, hi * 2
        if lo > limit:
            raise TruncationError(
                f"tail of {op.name} stays above {tol:g} up to N = {limit}; raise summation_tol"
            )
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if op.tail_bound(mid) < tol:
            hi = mid
        else:
            lo = mid
    if op.tail_bound(lo) < tol:
        hi = lo
    if hi > limit:
        raise TruncationError(
            f"tail of {op.name} needs N = {hi} > {limit} to fall below {tol:g}"
        )
    return hi


def fold_frequency(k: float) -> float:
    """Map any real frequency into ``[0, pi]`` using evenness and periodicity."""
    k = math.fmod(k, 2 * math.pi)
    if k < 0:
        k += 2 * math.pi
    k = min(k, 2 * math.pi - k)
    return min(max(k, 0.0), math.pi)


def _check_k(k: float) -> float:
    k = float(k)
    if not (-1e-12 <= k <= math.pi * (1 + 1e-14)):
        raise DomainError(f"frequency k={k} outside [0, pi]")
    return min(max(k, 0.0), math.pi)


def fourier(op: TransferOperator, k: float) -> float:
    """``Qhat(k) = sum_n Q(n) cos(n k)`` for ``k`` in ``[0, pi]``."""
    k = _check_k(k)
    if op.model == "sos":
        x = math.exp(-op.beta)
        return (1.0 - x * x) / (1.0 - 2.0 * x * math.cos(k) + x * x)
    if op.model == "invsq":
        return 1.0 + op.a / 6.0 * (3.0 * k * k - 6.0 * math.pi * k + 2.0 * math.pi**2)
    n = cutoff(op)
    return _cosine_sum(op, k, n)


def _cosine_sum(op: TransferOperator, k: float, n: int, chunk: int = 1 << 20) -> float:
    total = float(evaluate(op, 0))
    start = 1
    while start <= n:
        stop = min(n, start + chunk - 1)
        j = np.arange(start, stop + 1)
        total += 2.0 * float(np.sum(evaluate(op, j) * np.cos(j * k)))
        start = stop + 1
    return total


def _invsq_one_sided_tail(a: float, n: int) -> float:
    # Euler-Maclaurin remainder of sum_{j > n} a / j^2
    x = float(n)
    return a * (1.0 / x - 0.5 / x**2 + 1.0 / (6.0 * x**3) - 1.0 / (30.0 * x**5))


def fourier_direct(op: TransferOperator, k: float, tol: float = 1e-10) -> float:
    """Truncated cosine sum, with the cutoff chosen so the omitted tail is below ``tol``.

    For ``k > 0`` and a tail that decreases monotonically, Abel summation bounds
    the omitted part by ``2 Q(N+1) / sin(k/2)``.  At ``k = 0`` the inverse
    square tail is added through its Euler-Maclaurin remainder instead.
    """
    k = _check_k(k)
    if op.model == "invsq" and k == 0.0:
        n = 2000
        return _cosine_sum(op, 0.0, n) + 2.0 * _invsq_one_sided_tail(op.a, n)
    if op.model == "invsq":
        s = math.sin(k / 2.0)
        n = max(1, math.ceil(math.sqrt(2.0 * op.a / (s * tol))))
        if n > 50 * MAX_CUTOFF:
            raise TruncationError(f"k={k} too close to 0 for direct summation")
        return _cosine_sum(op, k, n)
    return _cosine_sum(op, k, cutoff(op, tol))


def hurwitz_zeta2(w) -> np.ndarray | float:
    """Hurwitz zeta ``zeta(2, w) = sum_{n>=0} (n + w)**-2`` for ``w > 0``.

    Direct summation of the first terms plus the Euler-Maclaurin tail
    ``1/(N+w) + 1/(2(N+w)^2) + 1/(6(N+w)^3)``; absolute error below 1e-13.
    """
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr <= 0):
        raise DomainError("zeta(2, w) needs w > 0")
    n = np.arange(_HURWITZ_TERMS, dtype=float)
    shifted = n[:, None] + w_arr.reshape(1, -1)
    head = np.sum(1.0 / shifted[::-1] ** 2, axis=0)
    x = _HURWITZ_TERMS + w_arr.reshape(-1)
    tail = 1.0 / x + 0.5 / x**2 + 1.0 / (6.0 * x**3)
    out = (head + tail).reshape(w_arr.shape)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class FuzzyOperator:
    """The q-periodization ``Q^q`` as a symmetric circulant vector."""

    q: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if self.q < 2:
            raise ConfigError("period q must be at least 2")
        if vals.shape != (self.q,):
            raise ShapeError(f"expected {self.q} fuzzy values, got shape {vals.shape}")
        if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
            raise ConfigError("fuzzy operator entries must be finite and strictly positive")
        rev = np.concatenate([vals[:1], vals[:0:-1]])
        if not np.allclose(vals, rev, rtol=1e-12, atol=0):
            raise ConfigError("fuzzy operator is not even modulo q")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "FuzzyOperator":
        return cls(len(values), np.asarray(values, dtype=float))

    @property
    def one_norm(self) -> float:
        return float(np.sum(self.values))

    def matrix(self) -> np.ndarray:
        """Circulant matrix ``C[i, j] = Q^q(i - j)``."""
        return circulant(self.values)

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.q:
            raise ShapeError(f"vector of length {v.shape[0]} does not match q={self.q}")
        return self.matrix() @ v

    def eigenvalue(self, j: int) -> float:
        """Circulant eigenvalue ``sum_r Q^q(r) cos(2 pi j r / q)``."""
        r = np.arange(self.q)
        return float(np.sum(self.values * np.cos(2 * np.pi * j * r / self.q)))

    def __repr__(self):
        return f"FuzzyOperator(q={self.q}, values={np.array2string(self.values, precision=10)})"


def _fuzzy_closed(op: TransferOperator, q: int) -> Optional[np.ndarray]:
    r = np.minimum(np.arange(q), q - np.arange(q)).astype(float)
    if op.model == "sos":
        x = math.exp(-op.beta)
        # cosh(beta (i - q/2)) / sinh(beta q / 2), rewritten without overflow
        return (x**r + x ** (q - r)) / (1.0 - x**q)
    if op.model == "invsq":
        out = np.empty(q)
        out[0] = 1.0 + op.a * math.pi**2 / (3.0 * q * q)
        w = r[1:] / q
        out[1:] = op.a / q**2 * (hurwitz_zeta2(w) + hurwitz_zeta2(1.0 - w))
        return out
    return None


def _class_tail_invsq(a: float, q: int, r: int, m_max: int) -> float:
    """Euler-Maclaurin value of ``sum_{|m| > m_max} a / (r + q m)^2``."""
    total = 0.0
    for c in (r / q, -r / q):
        y = m_max + 1 + c
        total += 1.0 / y + 0.5 / y**2 + 1.0 / (6.0 * y**3) - 1.0 / (30.0 * y**5)
    return a / q**2 * total


def _fuzzy_direct(op: TransferOperator, q: int) -> np.ndarray:
    r = np.minimum(np.arange(q), q - np.arange(q))
    if op.model == "invsq":
        m_max = 4000
        m = np.arange(-m_max, m_max + 1)
        classes = np.empty(q // 2 + 1)
        for i in range(q // 2 + 1):
            classes[i] = float(np.sum(evaluate(op, i + q * m))) + _class_tail_invsq(op.a, q, i, m_max)
        return classes[r]
    n = cutoff(op)
    j = np.arange(-n, n + 1)
    out = np.zeros(q)
    np.add.at(out, np.mod(j, q), evaluate(op, j))
    # evenness exact: both residues i and q - i read the same entry
    return out[r]


def fuzzy(op: TransferOperator, q: int, method: str = "auto") -> FuzzyOperator:
    """Fuzzy operator ``Q^q(i) = sum_j Q(i + q j)`` for ``i = 0..q-1``.

    ``method`` is ``"closed"`` (SOS and inverse square only), ``"direct"``
    (lattice sum) or ``"auto"`` (closed form when available).
    """
    q = int(q)
    if q < 2:
        raise ConfigError("period q must be at least 2")
    if method not in ("auto", "closed", "direct"):
        raise ConfigError(f"unknown fuzzy method {method!r}")
    values = None
    if method in ("auto", "closed"):
        values = _fuzzy_closed(op, q)
        if values is None and method == "closed":
            raise ConfigError(f"no closed form for {op.name}")
    if values is None:
        if op.tail_bound(0) is None:
            raise ConfigError(f"{op.name} is not summable: no tail rule or tail bound given")
        values = _fuzzy_direct(op, q)
    return FuzzyOperator(q, values)


def parse_custom_table(text: str, summation_tol: float = 1e-12) -> TransferOperator:
    """Parse the two-column ``offset value`` format with an optional tail header.

    The header is a line ``tail geometric r`` or ``tail power alpha c``
    (a leading ``#`` and a colon after ``tail`` are allowed).  Other lines
    starting with ``#`` are comments.
    """
    tail = None
    table = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        body = line.lstrip("#").strip()
        tokens = body.replace(":", " ").split()
        if tokens and tokens[0].lower() == "tail":
            try:
                kind = tokens[1].lower()
                params = tuple(float(t) for t in tokens[2:])
                tail = TailRule(kind, params)
            except (IndexError, ValueError, TypeError) as exc:
                raise ConfigError(f"line {lineno}: bad tail rule {body!r}") from exc
            continue
        if line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"line {lineno}: expected 'offset value', got {line!r}")
        try:
            offset, value = int(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: cannot parse {line!r}") from exc
        if offset < 0:
            raise ConfigError(f"line {lineno}: offsets must be >= 0 (symmetry is implied)")
        if offset in table:
            raise ConfigError(f"line {lineno}: duplicate offset {offset}")
        table[offset] = value
    return TransferOperator.custom(table, tail=tail, summation_tol=summation_tol)


def load_custom_table(path, summation_tol: float = 1e-12) -> TransferOperator:
    with open(path, encoding="utf-8") as fh:
        return parse_custom_table(fh.read(), summation_tol=summation_tol)
