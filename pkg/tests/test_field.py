"""Tests for CALFIELD parsing, field processing, and verification."""

import numpy as np
import pytest

from semicalib import (
    EpsilonInferenceError,
    FieldConfig,
    ParseError,
    build_report,
    demo_calfield,
    finite_difference_continuity,
    parse_calfield,
    process_field,
    verify_field,
)
from semicalib.jsonio import dumps
from helpers import constant_field_text, ramp_field_text, rotating_plane_field_text

MINIMAL = """CALFIELD 1
DIM 4
POINTS 1
P 0
X 0 0 0 0
G 1 0 0 0 1 0 0 1 0 1
W 1 0 0 0 0 1
"""

FAST = FieldConfig(samples=2_000, restarts=3)


class TestParser:
    def test_minimal_valid(self):
        grid = parse_calfield(MINIMAL)
        assert grid.dim == 4 and len(grid.points) == 1
        np.testing.assert_array_equal(grid.points[0].g.entries, np.eye(4))
        assert grid.points[0].omega.entries[0, 1] == 1.0
        assert grid.points[0].omega.entries[2, 3] == 1.0

    def test_comments_and_blank_lines(self):
        text = "# header comment\n\nCALFIELD 1  # trailing\nDIM 4\nPOINTS 1\nP 0\nX 0 0 0 0\nG 1 0 0 0 1 0 0 1 0 1\nW 1 0 0 0 0 1\n"
        assert len(parse_calfield(text).points) == 1

    def test_point_count_mismatch(self):
        text = MINIMAL.replace("POINTS 1", "POINTS 2")
        with pytest.raises(ParseError, match="point count mismatch"):
            parse_calfield(text)

    def test_trailing_content(self):
        with pytest.raises(ParseError, match="point count mismatch"):
            parse_calfield(MINIMAL + "P 1\n")

    def test_non_pd_metric_reports_point(self):
        text = MINIMAL.replace("G 1 0 0 0 1 0 0 1 0 1", "G -1 0 0 0 1 0 0 1 0 1")
        with pytest.raises(ParseError, match="positive definite at point 0"):
            parse_calfield(text)

    def test_non_finite_number(self):
        text = MINIMAL.replace("W 1 0 0 0 0 1", "W inf 0 0 0 0 1")
        with pytest.raises(ParseError, match="non-finite"):
            parse_calfield(text)

    def test_bad_header(self):
        with pytest.raises(ParseError, match="CALFIELD"):
            parse_calfield("NOTAFIELD 1\n")

    def test_bad_version(self):
        with pytest.raises(ParseError, match="version"):
            parse_calfield(MINIMAL.replace("CALFIELD 1", "CALFIELD 2"))

    def test_wrong_coefficient_count(self):
        with pytest.raises(ParseError, match="expected 10 metric"):
            parse_calfield(MINIMAL.replace("G 1 0 0 0 1 0 0 1 0 1", "G 1 0 0"))

    def test_wrong_index(self):
        with pytest.raises(ParseError, match="point index"):
            parse_calfield(MINIMAL.replace("P 0", "P 3"))

    def test_dim_bounds(self):
        with pytest.raises(ParseError, match=r"\[2, 16\]"):
            parse_calfield("CALFIELD 1\nDIM 17\nPOINTS 1\n")

    def test_error_carries_line_number(self):
        text = MINIMAL.replace("W 1 0 0 0 0 1", "W 1 0 junk 0 0 1")
        with pytest.raises(ParseError, match=r"line 7"):
            parse_calfield(text)


class TestProcessField:
    def test_constant_field_identical_points(self):
        grid = parse_calfield(constant_field_text(4, "1 0 0 0 1 0 0 1 0 1", "1 0 0 0 0 1", 9))
        cf = process_field(grid)
        assert cf.epsilon == pytest.approx(1.0, abs=1e-12)
        assert all(o.gap_ok for o in cf.outcomes)
        smalls = [e["value"] for e in cf.frame_continuity]
        assert all(v == 0.0 for v in smalls)
        first = cf.outcomes[0].construction
        for o in cf.outcomes[1:]:
            np.testing.assert_array_equal(o.construction.j.matrix, first.j.matrix)

    def test_ramp_all_gap_ok(self):
        grid = parse_calfield(ramp_field_text(np.linspace(0.6, 1.0, 5)))
        cf = process_field(grid)
        assert cf.epsilon == pytest.approx(0.36, abs=1e-12)
        assert all(o.gap_ok for o in cf.outcomes)
        for o, s in zip(cf.outcomes, np.linspace(0.6, 1.0, 5)):
            np.testing.assert_allclose(
                o.construction.g_j.entries, np.diag([1, 1, s, s]), atol=1e-10
            )

    def test_ramp_gap_violations_flagged(self):
        svals = np.linspace(0.6, 0.1, 5)
        grid = parse_calfield(ramp_field_text(svals))
        cf = process_field(grid)
        expected_bad = {k for k, s in enumerate(svals) if 0.09 < s * s < 0.18}
        assert expected_bad == {o.index for o in cf.outcomes if not o.gap_ok}
        bad = next(o for o in cf.outcomes if not o.gap_ok)
        assert bad.offending_eigenvalues == pytest.approx((0.1225,), abs=1e-12)
        assert bad.construction is None

    def test_base_epsilon_inference_failure(self):
        grid = parse_calfield(constant_field_text(4, "1 0 0 0 1 0 0 1 0 1", "0 0 0 0 0 0", 2))
        with pytest.raises(EpsilonInferenceError, match="cannot infer epsilon"):
            process_field(grid)

    def test_fixed_epsilon_accepted(self):
        grid = parse_calfield(constant_field_text(4, "1 0 0 0 1 0 0 1 0 1", "0 0 0 0 0 0", 2))
        cf = process_field(grid, FieldConfig(epsilon=1.0))
        assert all(o.gap_ok for o in cf.outcomes)
        assert cf.outcomes[0].construction.split.m == 0

    def test_odd_dimension_lifted(self):
        grid = parse_calfield(constant_field_text(3, "1 0 0 1 0 1", "1 0 0", 3))
        cf = process_field(grid)
        assert cf.lifted_from == 3 and cf.dim == 4
        assert all(o.construction.dim == 4 for o in cf.outcomes)
        report = build_report(cf)
        assert "lifted from 3 to 4" in report["notes"]

    def test_exclusion_does_not_alter_other_points(self):
        svals = [0.6, 0.475, 0.35, 0.225, 0.1]
        full = process_field(parse_calfield(ramp_field_text(svals)))
        pruned_vals = [s for s in svals if not (0.09 < s * s < 0.18)]
        pruned = process_field(parse_calfield(ramp_field_text(pruned_vals)))
        kept = [o for o in full.outcomes if o.gap_ok]
        assert len(kept) == len(pruned.outcomes)
        for a, b in zip(kept, pruned.outcomes):
            np.testing.assert_array_equal(a.construction.j.matrix, b.construction.j.matrix)
            np.testing.assert_array_equal(a.construction.g_j.entries, b.construction.g_j.entries)

    def test_empty_grid_rejected(self):
        import semicalib

        with pytest.raises(ValueError, match="empty"):
            process_field(semicalib.FieldGrid(dim=4, points=()))


class TestFramePropagation:
    def test_hints_keep_frames_continuous(self):
        thetas = np.linspace(0.0, np.pi / 2, 9)
        grid = parse_calfield(rotating_plane_field_text(thetas))
        cf_on = process_field(grid, FieldConfig(use_hints=True))
        cf_off = process_field(grid, FieldConfig(use_hints=False))
        on_max = max(e["value"] for e in cf_on.frame_continuity)
        off_max = max(e["value"] for e in cf_off.frame_continuity)
        assert on_max < 0.3
        assert off_max > 1.0  # sign-fixed spectral frames flip along the path

    def test_flip_visible_in_field_differences(self):
        thetas = np.linspace(0.0, np.pi / 2, 9)
        grid = parse_calfield(rotating_plane_field_text(thetas))
        fd_on = finite_difference_continuity(process_field(grid, FieldConfig(use_hints=True)))
        fd_off = finite_difference_continuity(process_field(grid, FieldConfig(use_hints=False)))
        assert max(e["omega"] for e in fd_on) < 0.3
        assert max(e["omega"] for e in fd_off) > 1.0

    def test_hints_do_not_change_invariants(self):
        thetas = np.linspace(0.0, np.pi / 2, 5)
        grid = parse_calfield(rotating_plane_field_text(thetas))
        cfg_on = FieldConfig(samples=2_000, restarts=3, use_hints=True)
        cfg_off = FieldConfig(samples=2_000, restarts=3, use_hints=False)
        rep_on = verify_field(process_field(grid, cfg_on), grid, cfg_on)
        rep_off = verify_field(process_field(grid, cfg_off), grid, cfg_off)
        assert rep_on.passed and rep_off.passed
        for a, b in zip(rep_on.data["points"], rep_off.data["points"]):
            for key, chk in a["checks"].items():
                other = b["checks"][key]
                assert abs(chk["value"] - other["value"]) <= 1e-9


class TestFiniteDifferenceContinuity:
    def test_constant_field_zero(self):
        grid = parse_calfield(constant_field_text(4, "1 0 0 0 1 0 0 1 0 1", "1 0 0 0 0 1", 3))
        edges = finite_difference_continuity(process_field(grid))
        assert all(e["j"] == 0.0 and e["g_j"] == 0.0 and e["omega"] == 0.0 for e in edges)

    def test_ramp_steps(self):
        svals = np.linspace(0.6, 1.0, 5)
        grid = parse_calfield(ramp_field_text(svals))
        edges = finite_difference_continuity(process_field(grid))
        # g_J = diag(1, 1, s, s): step 0.1 on two entries, coordinates 1 apart
        expected = np.sqrt(2) * 0.1 / 2
        for e in edges:
            assert e["j"] <= 1e-12
            assert e["g_j"] == pytest.approx(expected, abs=1e-10)
            assert e["omega"] == pytest.approx(expected, abs=1e-10)


class TestVerifyField:
    def test_constant_standard_passes(self):
        grid = parse_calfield(constant_field_text(4, "1 0 0 0 1 0 0 1 0 1", "1 0 0 0 0 1", 3))
        cf = process_field(grid, FAST)
        report = verify_field(cf, grid, FAST)
        assert report.passed
        assert report.data["summary"]["pass"] is True
        maxres = report.data["summary"]["max_residuals"]
        assert max(maxres[k] for k in ("j_squared", "compatibility", "j_invariance")) <= 1e-12

    def test_ramp_passes_with_expected_metrics(self):
        grid = parse_calfield(ramp_field_text(np.linspace(0.6, 1.0, 5)))
        cf = process_field(grid, FAST)
        report = verify_field(cf, grid, FAST)
        assert report.passed

    def test_adversarial_comass_flagged(self):
        # omega = 2 dx1^dx2 has comass 2: eigenvalue 4 must fail the bound
        grid = parse_calfield(constant_field_text(4, "1 0 0 0 1 0 0 1 0 1", "2 0 0 0 0 0", 2))
        cf = process_field(grid, FAST)
        report = verify_field(cf, grid, FAST)
        assert not report.passed
        entry = report.data["points"][0]
        assert max(entry["eigenvalues"]) == pytest.approx(4.0, abs=1e-9)
        assert entry["checks"]["input_eigenvalue_bound"]["pass"] is False

    def test_power_checks_included(self):
        grid = parse_calfield(constant_field_text(4, "1 0 0 0 1 0 0 1 0 1", "1 0 0 0 0 1", 2))
        cfg = FieldConfig(samples=2_000, restarts=3, powers=(2,))
        report = verify_field(process_field(grid, cfg), grid, cfg)
        assert report.passed
        checks = report.data["points"][0]["checks"]
        assert "power_2_comass_bound" in checks and "power_2_calibration_bound" in checks

    def test_gap_points_listed_but_not_failing(self):
        grid = parse_calfield(ramp_field_text([0.6, 0.475, 0.35, 0.225, 0.1]))
        cf = process_field(grid, FAST)
        report = verify_field(cf, grid, FAST)
        assert report.passed  # excluded point is reported, not failed
        flagged = [p for p in report.data["points"] if not p["gap_ok"]]
        assert len(flagged) == 1 and flagged[0]["m"] is None


class TestDeterminism:
    def test_reports_byte_identical(self):
        grid = parse_calfield(ramp_field_text(np.linspace(0.6, 1.0, 4)))
        a = dumps(verify_field(process_field(grid, FAST), grid, FAST).data)
        b = dumps(verify_field(process_field(grid, FAST), grid, FAST).data)
        assert a == b

    def test_build_report_byte_identical(self):
        grid = parse_calfield(rotating_plane_field_text(np.linspace(0, 1, 5)))
        a = dumps(build_report(process_field(grid)))
        b = dumps(build_report(process_field(grid)))
        assert a == b


class TestDemos:
    @pytest.mark.parametrize("name", ["standard", "scaled", "rank-deficient", "odd3"])
    def test_demo_parses_and_verifies(self, name):
        text = demo_calfield(name)
        grid = parse_calfield(text)
        cf = process_field(grid, FAST)
        report = verify_field(cf, grid, FAST)
        assert report.passed

    def test_unknown_demo(self):
        with pytest.raises(ValueError, match="unknown demo"):
            demo_calfield("nope")
