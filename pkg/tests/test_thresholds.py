import json
import math

import numpy as np
import pytest

from ggmtree.errors import ConfigError, PreconditionError
from ggmtree.simplex_dynamics import spectrum_at_eq
from ggmtree.thresholds import (
    ALL_Q,
    delta_q,
    dobrushin_unique,
    invsq_min_period,
    invsq_negative_threshold,
    invsq_region,
    invsq_window,
    scan_q0,
    sos_min_period,
    sos_region,
    sos_threshold,
    threshold_report,
)
from ggmtree.transfer_ops import TailRule, TransferOperator, fuzzy

FIG1_A = 1536 / (73 * math.pi**2)
SOS_BETAS = [0.3, 0.6, 0.9, 1.2, 1.5]


def _window_grid(d, n=15):
    lo, hi = invsq_window(d)
    return np.linspace(lo * 1.001, hi * 0.999, n)


class TestSOS:
    def test_threshold_value(self):
        assert sos_threshold(2) == pytest.approx(1.7627472, abs=1e-7)
        assert sos_region(2.0, 2) and not sos_region(1.0, 2)
        assert sos_region(50.0, 7)

    def test_spot_period(self):
        assert sos_min_period(1.0, 2) == 6

    def test_boundary_period(self):
        for d in (2, 3, 5):
            assert sos_min_period(sos_threshold(d), d) == 2

    def test_precondition(self):
        with pytest.raises(PreconditionError):
            sos_min_period(2.0, 2)

    @pytest.mark.parametrize("beta", SOS_BETAS)
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_scan_agreement(self, beta, d):
        scan = scan_q0(TransferOperator.sos(beta), d, 64)
        expected = 2 if sos_region(beta, d) else sos_min_period(beta, d)
        assert scan.minimal_q == expected
        assert scan.eventual_q == expected


class TestInverseSquare:
    def test_window_d5(self):
        lo, hi = invsq_window(5)
        assert lo == pytest.approx(0.3473869, abs=1e-7)
        assert hi == pytest.approx(2.7356720, abs=1e-7)

    def test_region(self):
        assert invsq_region(3.0, 5).classification == "all_q"
        assert invsq_region(1.0, 5).classification == "window"
        thr = invsq_negative_threshold(5)
        assert thr == pytest.approx(1.2158542, abs=1e-7)
        assert invsq_region(thr * (1 + 1e-9), 5).negative_side
        assert not invsq_region(thr * (1 - 1e-9), 5).negative_side

    def test_small_d_window(self):
        reg = invsq_region(100.0, 3)
        assert reg.classification == "window" and not reg.upper_bound_applies
        assert "d < 4" in " ".join(threshold_report(TransferOperator.inverse_square(1.0), 3, 16).notes)

    def test_spot_period(self):
        assert invsq_min_period(1.0, 5) == 5

    def test_lower_edge(self):
        lo, _ = invsq_window(5)
        assert invsq_min_period(lo, 5) == 2
        with pytest.raises(PreconditionError):
            invsq_min_period(lo * 0.9, 5)

    @pytest.mark.parametrize("d", [4, 5, 6])
    def test_scan_agreement(self, d):
        neg = invsq_negative_threshold(d)
        for a in _window_grid(d):
            scan = scan_q0(TransferOperator.inverse_square(a), d, 128)
            closed = invsq_min_period(a, d)
            if a <= neg:
                assert scan.minimal_q == closed and scan.eventual_q == closed
            else:
                # the negative eigenvalue may open earlier periods
                assert scan.positive_minimal_q == closed
                assert scan.minimal_q <= closed

    def test_negative_side_opens_period_two(self):
        scan = scan_q0(TransferOperator.inverse_square(2.0), 5, 32)
        assert scan.minimal_q == 2 and invsq_min_period(2.0, 5) == 6

    @pytest.mark.parametrize("d", [4, 5, 6])
    def test_outside_window_gives_two(self, d):
        lo, hi = invsq_window(d)
        for a in (lo * 0.5, lo * 0.99, hi * 1.01, hi * 4):
            assert scan_q0(TransferOperator.inverse_square(a), d, 64).minimal_q == 2


class TestScan:
    def test_sos_region_case(self):
        assert scan_q0(TransferOperator.sos(2.0), 2, 16).minimal_q == 2

    def test_figure_neutral(self):
        row = scan_q0(TransferOperator.inverse_square(FIG1_A), 5, 16).row(16)
        assert row.neutral == [3] and row.exists and row.tau is not None

    def test_neutral_exact(self):
        op = TransferOperator.inverse_square(FIG1_A)
        rep = spectrum_at_eq(fuzzy(op, 16), 5, op)
        assert abs(abs(rep.eigenvalues[2].value) - 1) < 1e-10

    @pytest.mark.parametrize("op", [TransferOperator.sos(0.5), TransferOperator.inverse_square(0.5)])
    def test_monotone_in_d(self, op):
        qs = [scan_q0(op, d, 128).minimal_q for d in range(2, 9)]
        assert all(a >= b for a, b in zip(qs, qs[1:]))

    def test_custom_operator(self):
        op = TransferOperator.custom([1.0, 0.5, 0.2], tail=TailRule("geometric", (0.3,)))
        scan = scan_q0(op, 3, 32)
        assert scan.minimal_q is not None
        assert scan.row(scan.minimal_q).unstable_dim >= 1

    def test_q_max_limit(self):
        with pytest.raises(ConfigError):
            scan_q0(TransferOperator.sos(1.0), 2, 600)


class TestDobrushin:
    def test_q2_d2(self):
        assert dobrushin_unique(TransferOperator.sos(0.5), 2, 2) is True
        assert dobrushin_unique(TransferOperator.sos(0.7), 2, 2) is False

    def test_q5_d3(self):
        assert dobrushin_unique(TransferOperator.sos(0.12), 5, 3) is True
        assert dobrushin_unique(TransferOperator.sos(0.13), 5, 3) is False

    def test_delta_sos_scan(self):
        value, ok = delta_q(TransferOperator.sos(1.0), 5)
        assert ok and value == pytest.approx(4.0)

    @pytest.mark.parametrize("q", [2, 3, 6])
    def test_delta_nonnegative(self, q):
        for op in (TransferOperator.inverse_square(3.0), TransferOperator.custom([1.0, 0.9, 0.1], tail=TailRule("geometric", (0.5,)))):
            value, _ = delta_q(op, q)
            assert value >= 0

    def test_growing_tail_inconclusive(self):
        # U(j) = 0.1 j^1.5 has increments growing like sqrt(j), so the sup sits at the window edge
        op = TransferOperator.custom([math.exp(-0.1 * j**1.5) for j in range(60)], tail=TailRule("geometric", (0.5,)))
        value, ok = delta_q(op, 4, window=10)
        assert not ok
        assert dobrushin_unique(op, 4, 2) is None

    def test_unsupported_custom(self):
        assert dobrushin_unique(TransferOperator.custom([1.0, 0.5]), 3, 2) is None

    def test_no_overlap_with_existence(self):
        for beta in np.linspace(0.05, 2.0, 40):
            op = TransferOperator.sos(beta)
            for d in (2, 3, 4):
                scan = scan_q0(op, d, 12)
                for q in range(2, 13):
                    assert not (dobrushin_unique(op, q, d) and scan.row(q).exists)


class TestReport:
    def test_sos_report(self):
        rep = threshold_report(TransferOperator.sos(1.0), 2, 16)
        assert rep.minimal_period == 6 and rep.closed_form == 6
        doc = json.loads(rep.to_json())
        assert doc["minimal_period"] == 6 and len(doc["per_q"]) == 15
        assert rep.to_csv().splitlines()[0].startswith("model,params,d,q")

    def test_all_q(self):
        assert threshold_report(TransferOperator.sos(2.0), 2, 8).minimal_period == ALL_Q
