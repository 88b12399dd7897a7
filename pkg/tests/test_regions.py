import itertools
import math

import numpy as np
import pytest

from miso_outage.outage_mc import CaseProbabilities, estimate_case_probs
from miso_outage.regions import (
    CSV_COLUMNS,
    BoundaryPoint,
    GridConfig,
    InstantaneousRegionPipeline,
    OutageSpec,
    RegionBoundary,
    bias_interval,
    boundary_csv_lines,
    common_inst_member,
    fixed_choice_member,
    format_value,
    individual_inst_member,
    non_dominated_points,
    trace_boundary,
    write_boundary_csv,
)

NOISE = (0.5, 0.5)


def synth(p_a=0.0, p_b=0.0, p_c1=0.0, p_c2=0.0, p_d=0.0):
    return CaseProbabilities.synthetic(p_a, p_b, p_c1, p_c2, p_d)


class TestOutageSpec:
    def test_common(self):
        spec = OutageSpec.common(0.1)
        assert spec.mode == "common" and spec.epsilon == 0.1

    def test_individual(self):
        spec = OutageSpec.individual(0.1, 0.2)
        assert (spec.epsilon1, spec.epsilon2) == (0.1, 0.2)

    @pytest.mark.parametrize("eps", [0.0, 1.0, -0.5, 1.5])
    def test_rejects_out_of_range(self, eps):
        with pytest.raises(ValueError):
            OutageSpec.common(eps)
        with pytest.raises(ValueError):
            OutageSpec.individual(eps, 0.5)

    def test_rejects_bad_mode(self):
        with pytest.raises(ValueError, match="mode"):
            OutageSpec(mode="joint", epsilon=0.1)


class TestMembershipFrozen:
    def test_common_threshold(self):
        probs = synth(p_b=0.92, p_d=0.08)
        assert common_inst_member(probs, 0.1).member
        assert common_inst_member(probs, 0.1).margin == pytest.approx(0.02)
        assert not common_inst_member(synth(p_b=0.85, p_d=0.15), 0.1).member

    def test_half_b_half_d_pins_bias(self):
        """p_b = p_d = 0.5 with eps = 0.25 per link: the only working coin
        bias is exactly one half."""
        probs = synth(p_b=0.5, p_d=0.5)
        verdict = individual_inst_member(probs, 0.25, 0.25)
        assert verdict.member
        assert verdict.margin1 == pytest.approx(0.25)
        assert verdict.margin_sum == pytest.approx(0.0)
        iv = bias_interval(probs, 0.25, 0.25)
        assert iv.nonempty
        assert iv.lo == pytest.approx(0.5)
        assert iv.hi == pytest.approx(0.5)

    def test_eps_one_gives_full_interval(self):
        probs = synth(0.2, 0.2, 0.2, 0.2, 0.2)
        iv = bias_interval(probs, 1.0, 1.0)
        assert iv.nonempty and iv.lo == 0.0 and iv.hi == 1.0

    def test_all_d_small_eps_empty_interval(self):
        """Everything in case D with eps = 0.4 per link: serving link 1 at
        least 60% of the time and link 2 at least 60% cannot both hold."""
        probs = synth(p_d=1.0)
        iv = bias_interval(probs, 0.4, 0.4)
        assert not iv.nonempty
        assert iv.lo == pytest.approx(0.6)
        assert iv.hi == pytest.approx(0.4)
        assert not individual_inst_member(probs, 0.4, 0.4).member

    def test_sum_condition_can_fail_alone(self):
        """Per-link conditions hold but the joint one fails: no bias works."""
        probs = synth(p_a=0.1, p_b=0.85, p_d=0.05)
        verdict = individual_inst_member(probs, 0.1, 0.1)
        assert verdict.margin1 == pytest.approx(0.0)
        assert verdict.margin2 == pytest.approx(0.0)
        assert verdict.margin_sum == pytest.approx(-0.05)
        assert not verdict.member
        iv = bias_interval(probs, 0.1, 0.1)
        assert not iv.nonempty
        assert iv.lo == pytest.approx(1.0)
        assert iv.hi == pytest.approx(0.0)

    def test_fixed_choice_frozen(self):
        probs = synth(p_b=0.85, p_c2=0.05, p_d=0.1)
        one = fixed_choice_member(probs, 0.1, 0.1, choice=1)
        assert one.member
        assert one.margin_served == pytest.approx(0.05)
        assert one.margin_other == pytest.approx(0.0)
        two = fixed_choice_member(probs, 0.1, 0.1, choice=2)
        assert not two.member
        assert two.margin_other == pytest.approx(-0.05)

    def test_fixed_choice_validation(self):
        with pytest.raises(ValueError, match="choice"):
            fixed_choice_member(synth(p_b=1.0), 0.1, 0.1, choice=3)

    def test_zero_p_d_interval(self):
        good = synth(p_b=0.95, p_c1=0.05)
        assert bias_interval(good, 0.1, 0.1).as_dict() == {
            "lo": 0.0,
            "hi": 1.0,
            "nonempty": True,
        }
        bad = synth(p_a=0.5, p_b=0.5)
        iv = bias_interval(bad, 0.1, 0.1)
        assert not iv.nonempty


def count_probs(n, c_a, c_b, c_c1, c_c2):
    return CaseProbabilities.from_counts(n, c_a, c_b, c_c1, c_c2, 0, 0)


class TestMembershipAlgebra:
    EPS = (0.1, 0.25, 0.4, 0.75)

    def iter_count_vectors(self, n=14):
        for c_a, c_b, c_c1, c_c2 in itertools.product(range(0, n + 1, 2), repeat=4):
            if c_a + c_b + c_c1 + c_c2 <= n:
                yield count_probs(n, c_a, c_b, c_c1, c_c2)

    def test_interval_matches_membership(self):
        for probs in self.iter_count_vectors():
            for e1, e2 in itertools.product(self.EPS, repeat=2):
                verdict = individual_inst_member(probs, e1, e2)
                iv = bias_interval(probs, e1, e2)
                assert iv.nonempty == verdict.member
                if iv.nonempty:
                    assert 0.0 <= iv.lo <= iv.hi <= 1.0

    def test_interval_endpoints_satisfy_constraints(self):
        for probs in self.iter_count_vectors():
            for e1, e2 in itertools.product(self.EPS, repeat=2):
                iv = bias_interval(probs, e1, e2)
                if not iv.nonempty:
                    continue
                for p in (iv.lo, iv.hi, 0.5 * (iv.lo + iv.hi)):
                    s1 = probs.p_b + probs.p_c1 + p * probs.p_d
                    s2 = probs.p_b + probs.p_c2 + (1.0 - p) * probs.p_d
                    assert s1 >= 1.0 - e1 - 1e-9
                    assert s2 >= 1.0 - e2 - 1e-9

    def test_fixed_choice_implies_individual(self):
        for probs in self.iter_count_vectors():
            for e1, e2 in itertools.product(self.EPS, repeat=2):
                for choice in (1, 2):
                    if fixed_choice_member(probs, e1, e2, choice).member:
                        assert individual_inst_member(probs, e1, e2).member

    def test_common_implies_fixed_choice(self):
        for probs in self.iter_count_vectors():
            for eps in self.EPS:
                if common_inst_member(probs, eps).member:
                    assert fixed_choice_member(probs, eps, eps, 1).member
                    assert fixed_choice_member(probs, eps, eps, 2).member

    def test_razor_tie_counts_stay_consistent(self):
        """Counts that sit exactly on the eps thresholds at production scale."""
        n, e = 20000, 0.1
        for c_a, c_b, c_c1, c_c2 in [
            (2000, 18000, 0, 0),
            (0, 18000, 0, 2000),
            (0, 16000, 2000, 2000),
            (2000, 16000, 0, 0),
            (0, 18000, 1000, 1000),
        ]:
            probs = count_probs(n, c_a, c_b, c_c1, c_c2)
            verdict = individual_inst_member(probs, e, e)
            assert bias_interval(probs, e, e).nonempty == verdict.member
            for choice in (1, 2):
                if fixed_choice_member(probs, e, e, choice).member:
                    assert verdict.member
            if common_inst_member(probs, e).member:
                assert fixed_choice_member(probs, e, e, 1).member


class TestTraceBoundary:
    def test_linear_region(self):
        grid = GridConfig(r1_cap=1.0, r2_cap=1.2, n_points=11)
        boundary = trace_boundary(lambda r1, r2: r1 + r2 <= 1.0, grid)
        assert not boundary.warnings
        assert len(boundary.points) == 11
        for p in boundary.points:
            assert p.r2 == pytest.approx(1.0 - p.r1, abs=2.0 * grid.tolerance)

    def test_rectangle_collapses_to_corner(self):
        grid = GridConfig(r1_cap=1.0, r2_cap=1.0, n_points=11)
        boundary = trace_boundary(lambda r1, r2: r1 <= 0.5 and r2 <= 0.7, grid)
        assert len(boundary.points) == 1
        corner = boundary.points[0]
        assert corner.r1 == pytest.approx(0.5)
        assert corner.r2 == pytest.approx(0.7, abs=2.0 * grid.tolerance)

    def test_non_monotone_warning(self):
        grid = GridConfig(r1_cap=1.0, r2_cap=1.0, n_points=11)
        member = lambda r1, r2: (r1 < 0.25 or 0.55 < r1 < 0.85) and r2 <= 0.5
        boundary = trace_boundary(member, grid)
        assert any("non-monotone" in w for w in boundary.warnings)

    def test_cap_warning(self):
        grid = GridConfig(r1_cap=1.0, r2_cap=1.0, n_points=5)
        boundary = trace_boundary(lambda r1, r2: True, grid)
        assert any("cap" in w for w in boundary.warnings)
        assert boundary.points[-1].r2 == 1.0

    def test_annotate_payload(self):
        grid = GridConfig(r1_cap=1.0, r2_cap=1.2, n_points=5)
        boundary = trace_boundary(
            lambda r1, r2: r1 + r2 <= 1.0, grid, annotate=lambda r1, r2: {"s": r1 + r2}
        )
        assert all(abs(p.payload["s"] - (p.r1 + p.r2)) < 1e-12 for p in boundary.points)

    def test_metadata_merge(self):
        grid = GridConfig(r1_cap=2.0, r2_cap=1.0, n_points=5, tol=1e-4)
        boundary = trace_boundary(lambda r1, r2: r2 <= 0.1, grid, metadata={"tag": "x"})
        assert boundary.metadata["tag"] == "x"
        assert boundary.metadata["bisection_tol"] == 1e-4
        assert boundary.metadata["n_grid"] == 5

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridConfig(r1_cap=1.0, r2_cap=1.0, n_points=1)
        with pytest.raises(ValueError):
            GridConfig(r1_cap=-1.0, r2_cap=1.0)


class TestNonDominated:
    def test_matches_bruteforce(self, rng):
        pts = [
            BoundaryPoint(float(x), float(y))
            for x, y in rng.uniform(0.0, 1.0, size=(60, 2))
        ]
        kept = non_dominated_points(pts)
        expected = [
            p
            for p in pts
            if not any(
                (q.r1 >= p.r1 and q.r2 > p.r2) or (q.r1 > p.r1 and q.r2 >= p.r2)
                for q in pts
            )
        ]
        assert sorted((p.r1, p.r2) for p in kept) == sorted(
            (p.r1, p.r2) for p in expected
        )
        r1s = [p.r1 for p in kept]
        assert r1s == sorted(r1s)

    def test_duplicates_collapse(self):
        pts = [BoundaryPoint(0.3, 0.4), BoundaryPoint(0.3, 0.4), BoundaryPoint(0.1, 0.5)]
        kept = non_dominated_points(pts)
        assert [(p.r1, p.r2) for p in kept] == [(0.1, 0.5), (0.3, 0.4)]


@pytest.fixture(scope="module")
def pipeline(demo_source):
    return InstantaneousRegionPipeline(demo_source, NOISE)


class TestPipeline:
    def test_case_probs_match_direct_estimator(self, pipeline, demo_source):
        for point in ((0.5, 0.5), (0.8, 0.3), (1.4, 1.4)):
            direct = estimate_case_probs(demo_source, point, NOISE)
            cached = pipeline.case_probs(*point)
            assert cached.count_a == direct.count_a
            assert cached.count_b == direct.count_b
            assert cached.count_c1 == direct.count_c1
            assert cached.count_c2 == direct.count_c2

    def test_membership_monotone_along_column(self, pipeline):
        spec = OutageSpec.individual(0.1, 0.1)
        r1 = 0.4
        heights = np.linspace(0.0, 2.5, 26)
        flags = [pipeline.member(r1, h, spec) for h in heights]
        assert flags == sorted(flags, reverse=True)

    def test_su_caps_are_quantiles(self, pipeline):
        r1_cap, r2_cap = pipeline.su_caps(0.1, 0.2)
        assert r1_cap == pytest.approx(float(np.quantile(pipeline.su1, 0.1)) * 1.1)
        assert r2_cap == pytest.approx(float(np.quantile(pipeline.su2, 0.2)) * 1.1)

    def test_axis_intercept_is_su_order_statistic(self, pipeline):
        eps = 0.1
        spec = OutageSpec.individual(eps, eps)
        k = math.floor(eps * pipeline.n_samples)
        expected = float(np.sort(pipeline.su1)[k])
        got = pipeline.axis_intercept(spec, link=1)
        assert got == pytest.approx(expected, abs=1e-5)

    def test_scenario_nesting_pointwise(self, pipeline):
        eps = 0.1
        common = OutageSpec.common(eps)
        indiv = OutageSpec.individual(eps, eps)
        r1_cap, r2_cap = pipeline.su_caps(eps, eps)
        for r1 in np.linspace(0.0, r1_cap, 7):
            for r2 in np.linspace(0.0, r2_cap, 7):
                in_common = pipeline.member(r1, r2, common)
                in_fixed1 = pipeline.member(r1, r2, indiv, "fixed1")
                in_fixed2 = pipeline.member(r1, r2, indiv, "fixed2")
                in_indiv = pipeline.member(r1, r2, indiv)
                if in_common:
                    assert in_fixed1 and in_fixed2
                if in_fixed1 or in_fixed2:
                    assert in_indiv

    def test_trace_boundary_shape_and_payload(self, pipeline):
        spec = OutageSpec.individual(0.1, 0.1)
        caps = pipeline.su_caps(0.1, 0.1)
        grid = GridConfig(r1_cap=caps[0], r2_cap=caps[1], n_points=12)
        boundary = pipeline.trace(spec, grid)
        assert boundary.points
        r1s = [p.r1 for p in boundary.points]
        r2s = [p.r2 for p in boundary.points]
        assert r1s == sorted(r1s)
        assert all(x > y for x, y in zip(r2s, r2s[1:]))
        payload = boundary.points[0].payload
        assert {"p_a", "p_b", "p_c1", "p_c2", "p_d", "margin1", "margin2", "margin3"} <= set(payload)
        assert boundary.metadata["seed"] == 7
        assert boundary.metadata["n_samples"] == pipeline.n_samples

    def test_common_variant_rejects_fixed(self, pipeline):
        with pytest.raises(ValueError):
            pipeline.verdict(pipeline.case_probs(0.1, 0.1), OutageSpec.common(0.1), "fixed1")

    def test_parallel_columns_identical(self, demo_source):
        serial = InstantaneousRegionPipeline(demo_source, NOISE)
        parallel = InstantaneousRegionPipeline(demo_source, NOISE)
        r1_values = [0.0, 0.3, 0.6, 0.9]
        serial.precompute_columns(r1_values, workers=1)
        parallel.precompute_columns(r1_values, workers=2)
        for r1 in r1_values:
            np.testing.assert_array_equal(serial.column(r1), parallel.column(r1))


class TestCsv:
    def make_boundary(self):
        points = [
            BoundaryPoint(0.0, 1.5, {"p_a": 0.0, "p_b": 0.9123456789, "margin1": 0.05}),
            BoundaryPoint(0.5, 1.0, {"p_a": 0.01, "p_b": 0.9, "margin1": 0.0125}),
        ]
        return RegionBoundary(points=points, warnings=[], metadata={})

    def test_format_value(self):
        assert format_value(None) == ""
        assert format_value(0.5) == "0.5"
        assert format_value(0.9123456789) == "0.9123456789"
        assert format_value(1e-12) == "1e-12"

    def test_lines_header_and_missing_cells(self):
        lines = boundary_csv_lines(self.make_boundary())
        assert lines[0] == ",".join(CSV_COLUMNS)
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "1.5"
        assert first[CSV_COLUMNS.index("margin2")] == ""

    def test_write_round_trip(self, tmp_path):
        path = tmp_path / "boundary.csv"
        write_boundary_csv(self.make_boundary(), path)
        text = path.read_text()
        assert text.endswith("\n")
        rows = text.strip().split("\n")
        assert len(rows) == 3
        got = float(rows[1].split(",")[3])
        assert got == pytest.approx(0.9123456789, abs=1e-9)

    def test_deterministic_output(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_boundary_csv(self.make_boundary(), a)
        write_boundary_csv(self.make_boundary(), b)
        assert a.read_bytes() == b.read_bytes()
