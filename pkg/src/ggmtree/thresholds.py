"""Existence regions, minimal periods and the Dobrushin uniqueness check.

Closed forms cover the SOS and inverse-square models; :func:`scan_q0`
evaluates the spectral criterion directly for any transfer operator and is
the oracle the closed forms are tested against.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DomainError, PreconditionError, UnsupportedOffset
from .simplex_dynamics import GAP_TOL, NEUTRAL_TOL, _select_tau
from .transfer_ops import TransferOperator, evaluate, fold_frequency, fourier

__all__ = [
    "sos_threshold",
    "sos_region",
    "sos_min_period",
    "invsq_window",
    "invsq_negative_threshold",
    "invsq_region",
    "invsq_min_period",
    "ScanRow",
    "ScanResult",
    "scan_q0",
    "delta_q",
    "dobrushin_unique",
    "ThresholdReport",
    "threshold_report",
]

ALL_Q = "all q >= 2"
Q_MAX_LIMIT = 512


def _ceil(x: float) -> int:
    # absorb rounding noise just above an integer
    return int(math.ceil(x - 1e-9))


def _check_d(d: int) -> None:
    if int(d) != d or d < 2:
        raise DomainError(f"d must be an integer >= 2, got {d}")


def sos_threshold(d: int) -> float:
    """``arcosh((d+1)/(d-1))``: above it every period admits a non-trivial law."""
    _check_d(d)
    return math.acosh((d + 1) / (d - 1))


def sos_region(beta: float, d: int) -> bool:
    if not beta > 0:
        raise DomainError("beta must be positive")
    return beta > sos_threshold(d)


def sos_min_period(beta: float, d: int) -> int:
    """``ceil(2 pi / arccos(d - (d-1) cosh beta))`` below the all-q threshold."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    if beta > sos_threshold(d) * (1 + 1e-15):
        raise PreconditionError(f"beta={beta} is in the all-q region ({ALL_Q})")
    arg = d - (d - 1) * math.cosh(beta)
    # arccos has infinite slope at -1; snap rounding noise at the threshold
    arg = -1.0 if arg < -1.0 + 1e-12 else min(1.0, arg)
    return _ceil(2 * math.pi / math.acos(arg))


def invsq_window(d: int):
    """``(lower, upper)``; ``upper`` is ``inf`` for d < 4 where no upper bound applies."""
    _check_d(d)
    lower = 6 / math.pi**2 * (d - 1) / (d + 2)
    upper = 9 / math.pi**2 * (d + 1) / (d - 3) if d >= 4 else math.inf
    return lower, upper


def invsq_negative_threshold(d: int) -> float:
    """Above ``6/pi^2 (d+1)/(d-2)`` the period-2 mode is expanding with negative sign."""
    _check_d(d)
    return math.inf if d == 2 else 6 / math.pi**2 * (d + 1) / (d - 2)


@dataclass(frozen=True)
class InvSqRegion:
    classification: str  # "all_q" or "window"
    negative_side: bool
    window: tuple
    upper_bound_applies: bool


def invsq_region(a: float, d: int) -> InvSqRegion:
    if not a > 0:
        raise DomainError("a must be positive")
    lower, upper = invsq_window(d)
    inside = lower <= a <= upper
    return InvSqRegion(
        "window" if inside else "all_q",
        a > invsq_negative_threshold(d),
        (lower, upper),
        d >= 4,
    )


def invsq_min_period(a: float, d: int) -> int:
    if not a > 0:
        raise DomainError("a must be positive")
    _check_d(d)
    radicand = math.pi**2 / 3 * (1 + 2 / d) - (2 / a) * (1 - 1 / d)
    if radicand < -1e-12:
        raise PreconditionError(f"a={a} lies below the window; every period admits a law")
    return _ceil(2 * math.pi / (math.pi - math.sqrt(max(radicand, 0.0))))


@dataclass
class ScanRow:
    q: int
    max_modulus: float
    max_positive: float
    unstable_dim: int
    unstable_dim_positive: int
    tau: Optional[float]
    neutral: List[int]

    @property
    def exists(self) -> bool:
        return self.tau is not None and self.unstable_dim >= 1


@dataclass
class ScanResult:
    """Per-q spectral table.

    ``minimal_q`` is the first passing period and ``eventual_q`` the first
    ``q`` from which every period up to ``q_max`` passes.  The ``positive_*``
    variants count only eigenvalues above ``+1``.
    """

    rows: List[ScanRow]
    minimal_q: Optional[int]
    eventual_q: Optional[int]
    positive_minimal_q: Optional[int]

    def row(self, q: int) -> ScanRow:
        return self.rows[q - 2]


def _first(rows, pred) -> Optional[int]:
    return next((r.q for r in rows if pred(r)), None)


def scan_q0(op: TransferOperator, d: int, q_max: int = 64) -> ScanResult:
    _check_d(d)
    if not 2 <= q_max <= Q_MAX_LIMIT:
        raise ConfigError(f"q_max must lie in 2..{Q_MAX_LIMIT}")
    base = fourier(op, 0.0)
    rows = []
    for q in range(2, q_max + 1):
        lam = [d * fourier(op, fold_frequency(2 * math.pi * j / q)) / base for j in range(1, q // 2 + 1)]
        mult = [1 if 2 * j == q else 2 for j in range(1, q // 2 + 1)]
        mods = [abs(x) for x in lam]
        tau = _select_tau(mods)
        tau_pos = _select_tau([x for x in lam if x > 0] or [0.0])
        rows.append(
            ScanRow(
                q,
                max(mods),
                max(lam),
                sum(m for x, m in zip(mods, mult) if tau is not None and x > tau),
                sum(m for x, m in zip(lam, mult) if tau_pos is not None and x > tau_pos),
                tau,
                [j for j, x in enumerate(mods, start=1) if abs(x - 1.0) <= NEUTRAL_TOL],
            )
        )
    eventual = None
    for r in reversed(rows):
        if not r.exists:
            break
        eventual = r.q
    return ScanResult(
        rows,
        _first(rows, lambda r: r.exists),
        eventual,
        _first(rows, lambda r: r.unstable_dim_positive >= 1),
    )


def delta_q(op: TransferOperator, q: int, window: int = 10):
    """``sup_{1<=a<q, j} (U(|j+a|) - U(|j|))`` with ``beta U = -log Q``.

    Returns ``(value, conclusive)``.  The sup is taken over
    ``|j| <= window*q``; it counts as inconclusive when the maximum sits at
    the edge of the window and still grows compared with half the window.
    """
    if q < 2:
        raise DomainError("q must be at least 2")
    n = window * q
    js = np.arange(-n, n + 1)
    try:
        u = {j: -math.log(v) for j, v in zip(range(0, n + q + 1), evaluate(op, np.arange(0, n + q + 1)))}
    except UnsupportedOffset:
        return None, False
    best, arg = -math.inf, 0
    half = -math.inf
    for a in range(1, q):
        diff = np.array([u[abs(j + a)] - u[abs(j)] for j in js])
        i = int(np.argmax(diff))
        if diff[i] > best:
            best, arg = float(diff[i]), int(js[i])
        inner = diff[np.abs(js) <= n // 2]
        half = max(half, float(inner.max()))
    conclusive = not (abs(arg) > n // 2 and best > half + 1e-12)
    return best, conclusive


def dobrushin_unique(op: TransferOperator, q: int, d: int) -> Optional[bool]:
    """``True`` iff ``(d+1) delta_q < 2``; ``None`` when the sup is not settled."""
    _check_d(d)
    if op.model == "sos":
        delta = op.beta * (q - 1)
    else:
        delta, ok = delta_q(op, q)
        if not ok:
            return None
    return (d + 1) * delta < 2


@dataclass
class ThresholdReport:
    model: str
    params: dict
    d: int
    region_all_q: bool
    minimal_period: Union[int, str]
    closed_form: Optional[int]
    scan: ScanResult
    dobrushin: List[tuple] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": self.params,
            "d": self.d,
            "region_all_q": self.region_all_q,
            "minimal_period": self.minimal_period,
            "closed_form": self.closed_form,
            "scan_minimal_q": self.scan.minimal_q,
            "scan_eventual_q": self.scan.eventual_q,
            "per_q": [
                {
                    "q": r.q,
                    "max_modulus": r.max_modulus,
                    "unstable_dim": r.unstable_dim,
                    "tau": r.tau,
                    "neutral": r.neutral,
                    "exists": r.exists,
                }
                for r in self.scan.rows
            ],
            "dobrushin_unique_at": [{"q": q, "unique": u} for q, u in self.dobrushin],
            "notes": self.notes,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "params", "d", "q", "max_modulus", "unstable_dim", "neutral", "exists", "dobrushin_unique"])
        params = ";".join(f"{k}={v!r}" for k, v in self.params.items())
        uniq = dict(self.dobrushin)
        for r in self.scan.rows:
            w.writerow(
                [
                    self.model,
                    params,
                    self.d,
                    r.q,
                    repr(r.max_modulus),
                    r.unstable_dim,
                    " ".join(map(str, r.neutral)),
                    int(r.exists),
                    "" if uniq.get(r.q) is None else int(uniq[r.q]),
                ]
            )
        return buf.getvalue()


def threshold_report(op: TransferOperator, d: int, q_max: int = 64) -> ThresholdReport:
    scan = scan_q0(op, d, q_max)
    notes: List[str] = []
    closed: Optional[int] = None
    if op.model == "sos":
        region = sos_region(op.beta, d)
        if not region:
            closed = sos_min_period(op.beta, d)
    elif op.model == "invsq":
        reg = invsq_region(op.a, d)
        region = reg.classification == "all_q"
        if not reg.upper_bound_applies:
            notes.append("window upper bound undefined for d < 4; window read as [lower, inf)")
        if reg.negative_side:
            notes.append("period 2 admits a law through the negative eigenvalue")
        if not region:
            closed = invsq_min_period(op.a, d)
    else:
        region = scan.eventual_q == 2
    if region:
        period: Union[int, str] = ALL_Q
    elif closed is not None:
        period = closed
    elif scan.minimal_q is not None:
        period = scan.minimal_q
    else:
        period = f"none <= {q_max}"
    dob = [(q, dobrushin_unique(op, q, d)) for q in range(2, min(q_max, 16) + 1)]
    return ThresholdReport(op.model, op.params(), d, region, period, closed, scan, dob, notes)
