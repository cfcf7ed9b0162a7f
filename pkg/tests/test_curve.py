import math

import numpy as np
import pytest

from blockwalk.curve import (
    CurveAssumptionError,
    build_curve,
    check_symmetry,
    composed_process,
    composed_processes,
    encode_components,
    level_hit_times,
    special_case_curve,
    verify_encoding,
)
from blockwalk.field import (
    build_field,
    field_from_jumps,
    field_from_paths,
    hitting_process,
    hitting_time,
    sample_clocks,
)
from blockwalk.instances import random_block_model, random_probe_direction, worked_instance
from blockwalk.model import BlockModel
from blockwalk.paths import (
    PiecewisePath,
    add,
    drift,
    excursions,
    polyline,
    probe_times,
    pure_jumps,
    step,
    sup_distance,
)


def random_curve_instance(rng, max_vertices=6):
    model = random_block_model(rng, max_vertices=max_vertices)
    rho = random_probe_direction(rng, model)
    fld = build_field(model, sample_clocks(model, rng))
    return model, rho, fld


class TestSymmetry:
    def test_two_types_always_pass(self, rng):
        for _ in range(10):
            model = random_block_model(rng, max_types=2)
            fld = build_field(model, sample_clocks(model, rng))
            rho = random_probe_direction(rng, model)
            assert check_symmetry(fld, rho).ok

    def test_factorized_ratios_pass(self, rng):
        for _ in range(10):
            model, rho, fld = random_curve_instance(rng)
            assert check_symmetry(fld, rho).ok

    def test_perturbed_ratio_fails_with_witness(self):
        R = [[1.0, 0.5, 0.5], [0.5, 1.0, 0.5], [0.5 + 1e-3, 0.5, 1.0]]
        fld = field_from_jumps([[(1.0, 1.0)], [(2.0, 1.0)], [(3.0, 1.0)]], R)
        report = check_symmetry(fld, (1.0, 1.0, 1.0))
        assert not report.ok
        col, i, j, _ = report.witnesses[0]
        assert col == 0
        assert {i, j} == {1, 2}

    def test_model_input_delegates_to_factorization(self):
        model = BlockModel(((1.0,), (1.0,)), ((1.0, 0.5), (0.5, 1.0)))
        assert check_symmetry(model, (1.0, 1.0)).ok

    def test_requires_positive_direction(self):
        fld, _ = worked_instance()
        with pytest.raises(CurveAssumptionError):
            check_symmetry(fld, (1.0, 0.0))


class TestWorkedInstance:
    def setup_method(self):
        self.fld, self.rho = worked_instance()
        self.bundle = build_curve(self.fld, self.rho)

    def test_level_maps(self):
        g1, g2 = self.bundle.levels
        expected_g1 = polyline([(0.0, 0.0), (0.5, 0.5)], 1.0)
        expected_g1 = add(expected_g1, step(0.5, 0.3))
        # g1: slope 1, jump to 0.8 at 0.5, flat to 1.5, slope 1 after
        assert g1.eval(0.3) == 0.3
        assert g1.eval_left(0.5) == 0.5
        assert g1.eval(0.5) == 0.8
        assert g1.eval(1.0) == 0.8
        assert g1.eval(1.5) == 0.8
        assert g1.eval(2.0) == pytest.approx(1.3, abs=1e-15)
        assert sup_distance(g2, drift(1.0)) == 0.0

    def test_combined_level(self):
        kappa = self.bundle.combined_level
        for s, expected in [(0.5, 0.25), (1.0, 0.5), (1.15, 0.65), (1.3, 0.8), (1.8, 0.8), (2.3, 0.8), (3.0, 1.15)]:
            assert kappa.eval(s) == pytest.approx(expected, abs=1e-15)

    def test_curve_coordinates(self):
        c1, c2 = self.bundle.curve
        for s, expected in [(0.5, 0.25), (1.0, 0.5), (1.15, 0.5), (1.3, 0.5), (1.8, 1.0), (2.3, 1.5), (3.0, 1.85)]:
            assert c1.eval(s) == pytest.approx(expected, abs=1e-15)
        assert sup_distance(c2, self.bundle.combined_level) == 0.0

    def test_curve_sums_to_parameter(self):
        for s in (0.4, 1.15, 1.9, 3.0):
            assert sum(g.eval(s) for g in self.bundle.curve) == pytest.approx(s, abs=1e-12)

    def test_composed_process_values(self):
        c = composed_process(self.fld, self.bundle, 0)
        assert c.eval(0.5) == -0.25
        assert c.eval_left(1.0) == -0.5
        assert c.eval(1.0) == 0.5
        assert c.eval(2.0) == pytest.approx(-0.2, abs=1e-15)
        assert c.eval(2.3) == pytest.approx(-0.5, abs=1e-15)
        assert c.eval(3.0) == pytest.approx(-0.85, abs=1e-15)

    def test_excursion_and_increment(self):
        records = encode_components(self.fld, self.bundle)
        assert len(records) == 1
        rec = records[0]
        assert rec.start == pytest.approx(1.0, abs=1e-12)
        assert rec.end == pytest.approx(2.3, abs=1e-12)
        assert rec.length == pytest.approx(1.3, abs=1e-12)
        assert rec.increment[0] == pytest.approx(1.0, abs=1e-12)
        assert rec.increment[1] == pytest.approx(0.3, abs=1e-12)
        # the increment is the ratio matrix applied to the component weights
        assert rec.increment[0] == pytest.approx(1.0 * 1.0 + 0.0, abs=1e-12)
        assert rec.increment[1] == pytest.approx(0.3 * 1.0 + 0.0, abs=1e-12)
        assert rec.length == pytest.approx(sum(rec.increment), abs=1e-12)

    def test_rows_share_excursion_intervals(self):
        p0, p1 = composed_processes(self.fld, self.bundle)
        assert excursions(p0) == pytest.approx(excursions(p1), abs=1e-12)

    def test_total_time_of_levels(self):
        hp = hitting_process(self.fld, self.rho)
        assert hp.total_time(0.3) == pytest.approx(0.6, abs=1e-12)
        assert hp.total_time(0.6) == pytest.approx(2.5, abs=1e-12)

    def test_level_hit_times_agree_across_rows(self):
        processes = composed_processes(self.fld, self.bundle)
        for y in (0.1, 0.3, 0.45, 0.6, 0.9):
            times = level_hit_times(processes, self.rho, y)
            assert times[0] == pytest.approx(times[1], abs=1e-12)

    def test_verify_encoding_passes(self):
        assert verify_encoding(self.fld, self.bundle)["pass"]


def curve_identity_gap(fld, bundle, eps=1e-6):
    process = hitting_process(fld, bundle.rho)
    ys = {0.0}
    for level in process.levels:
        ys.update((level, level + eps, max(level - eps, 0.0)))
    ys.add(max(process.levels, default=0.0) + 1.0)
    worst = 0.0
    for y in sorted(ys):
        t = process.evaluate(y)
        point = bundle.curve_point(sum(t))
        worst = max(worst, max(abs(a - b) for a, b in zip(point, t)))
    return worst


class TestCurveInvariants:
    def test_norm_identity_on_dense_grid(self, rng):
        for _ in range(20):
            _, rho, fld = random_curve_instance(rng)
            bundle = build_curve(fld, rho)
            for s in probe_times(*bundle.curve):
                assert sum(g.eval(s) for g in bundle.curve) == pytest.approx(s, abs=1e-9)

    def test_curve_traces_hitting_times(self, rng):
        for _ in range(20):
            _, rho, fld = random_curve_instance(rng)
            bundle = build_curve(fld, rho)
            assert curve_identity_gap(fld, bundle) <= 1e-9

    def test_level_sandwich_along_curve(self, rng):
        # combined level lies between the level map's left and right values
        # at the curve point
        for _ in range(10):
            _, rho, fld = random_curve_instance(rng)
            bundle = build_curve(fld, rho)
            for s in probe_times(*bundle.curve, bundle.combined_level):
                k = bundle.combined_level.eval(s)
                for g, c in zip(bundle.levels, bundle.curve):
                    assert g.eval_left(c.eval(s)) - 1e-9 <= k <= g.eval(c.eval(s)) + 1e-9

    def test_unit_lipschitz(self, rng):
        for _ in range(10):
            _, rho, fld = random_curve_instance(rng)
            bundle = build_curve(fld, rho)
            grid = probe_times(*bundle.curve)
            for a, b in zip(grid, grid[1:]):
                for c in bundle.curve:
                    move = c.eval(b) - c.eval(a)
                    assert -1e-12 <= move <= (b - a) + 1e-9

    def test_hit_time_maps_identical_and_match_total_time(self, rng):
        for _ in range(10):
            _, rho, fld = random_curve_instance(rng)
            bundle = build_curve(fld, rho)
            processes = composed_processes(fld, bundle)
            hp = hitting_process(fld, rho)
            levels = list(hp.levels)
            ys = [lv / 2 for lv in levels] + [lv + 0.1 for lv in levels] + [0.05]
            for y in ys:
                times = level_hit_times(processes, rho, y)
                expected = hp.total_time(y)
                for t in times:
                    assert t == pytest.approx(expected, abs=1e-9)

    def test_excursions_match_hitting_jumps(self, rng):
        for _ in range(20):
            _, rho, fld = random_curve_instance(rng)
            bundle = build_curve(fld, rho)
            report = verify_encoding(fld, bundle)
            assert report["pass"], report

    def test_aligned_time_vectors_lie_on_curve(self, rng):
        # vectors whose level-map values agree at a generic level, with each
        # map continuous there and rising on the left, are curve points
        # indexed by their own total time
        found = 0
        for _ in range(60):
            _, rho, fld = random_curve_instance(rng)
            bundle = build_curve(fld, rho)
            top = min(g.eval(5.0) for g in bundle.levels)
            u = float(rng.uniform(0.0, top))
            t = tuple(g_inv.eval(u) for g_inv in bundle.level_inverses)
            premise = all(
                abs(g.eval(ti) - u) <= 1e-12
                and g.eval_left(ti) == g.eval(ti)
                and (ti == 0.0 or g.slope_before(ti) > 0)
                for g, ti in zip(bundle.levels, t)
            )
            if not premise:
                continue  # u is skipped, jumped over, or flat on some axis
            found += 1
            point = bundle.curve_point(sum(t))
            assert max(abs(a - b) for a, b in zip(point, t)) <= 1e-9
        assert found >= 12


class TestSpecialCase:
    def _linear_offdiag_field(self, rng, m=2):
        rho = tuple(float(rng.uniform(0.5, 2.0)) for _ in range(m))
        nu = tuple(float(rng.uniform(0.3, 1.5)) for _ in range(m))
        paths = []
        for i in range(m):
            row = []
            for j in range(m):
                if i == j:
                    jumps = [
                        (float(t), float(w))
                        for t, w in zip(rng.uniform(0.2, 3.0, size=2), rng.uniform(0.2, 1.0, size=2))
                    ]
                    row.append(add(drift(-1.0), pure_jumps(jumps)))
                else:
                    row.append(drift(rho[i] * nu[j]))
            paths.append(row)
        return field_from_paths(paths), rho

    def test_matches_general_curve_on_linear_offdiagonals(self, rng):
        for _ in range(10):
            fld, rho = self._linear_offdiag_field(rng)
            sc = special_case_curve(fld, rho)
            general = build_curve(fld, rho).curve
            for a, b in zip(sc, general):
                assert sup_distance(a, b) <= 1e-12

    def test_single_type_drift_curve_is_identity(self):
        fld = field_from_paths([[drift(-1.0)]])
        (gamma,) = special_case_curve(fld, (1.0,))
        assert sup_distance(gamma, drift(1.0)) == 0.0
        (general,) = build_curve(fld, (1.0,)).curve
        assert sup_distance(general, drift(1.0)) == 0.0

    def test_rejects_jumping_offdiagonals(self):
        fld, rho = worked_instance()
        with pytest.raises(CurveAssumptionError):
            special_case_curve(fld, rho)

    def test_single_type_with_jumps_is_identity_via_general_curve(self, rng):
        # flat stretches of the level map rule out the plain-inverse route,
        # but the smooth composition still collapses to the identity
        model = BlockModel(((1.0, 0.5),), ((1.0,),))
        fld = build_field(model, sample_clocks(model, rng))
        (gamma,) = build_curve(fld, (1.0,)).curve
        assert sup_distance(gamma, drift(1.0)) <= 1e-12
        with pytest.raises(CurveAssumptionError):
            special_case_curve(fld, (1.0,))


class TestEmptyField:
    def test_composed_processes_are_scaled_drifts(self):
        model = BlockModel(((), ()), ((1.0, 0.5), (0.5, 1.0)))
        fld = build_field(model, sample_clocks(model, 0))
        rho = (2.0, 1.0)
        bundle = build_curve(fld, rho)
        processes = composed_processes(fld, bundle)
        total = sum(rho)
        for i, proc in enumerate(processes):
            assert sup_distance(proc, drift(-rho[i] / total)) <= 1e-15
            assert excursions(proc) == []


class TestAssumptionFailures:
    def test_symmetry_failure_blocks_curve(self):
        R = [[1.0, 0.5, 0.5], [0.5, 1.0, 0.5], [0.9, 0.5, 1.0]]
        fld = field_from_jumps([[(1.0, 1.0)], [(2.0, 1.0)], [(3.0, 1.0)]], R)
        with pytest.raises(CurveAssumptionError):
            build_curve(fld, (1.0, 1.0, 1.0))

    def test_bounded_diagonal_rejected(self):
        fld = field_from_paths([[pure_jumps([(1.0, 1.0)])]])
        with pytest.raises(CurveAssumptionError, match="drift"):
            build_curve(fld, (1.0,))

    def test_initially_flat_diagonal_rejected(self):
        diag = add(pure_jumps([(1.0, 1.0)]), polyline([(0.0, 0.0), (2.0, 0.0)], -1.0))
        fld = field_from_paths([[diag]])
        with pytest.raises(CurveAssumptionError, match="below zero"):
            build_curve(fld, (1.0,))

    def test_zero_direction_component_rejected(self):
        fld, _ = worked_instance()
        with pytest.raises(CurveAssumptionError):
            build_curve(fld, (1.0, 0.0))
