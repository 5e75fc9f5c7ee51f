import json
import math
from itertools import groupby

import numpy as np
import pytest

from polyriesz.energy import J, P_r
from polyriesz.errors import KernelCapabilityError
from polyriesz.geometry import (
    Polygon,
    area,
    random_polygon,
    reflect,
    regular_ngon,
    rotate,
    scale,
    scale_to_area,
    side_lengths,
    translate,
)
from polyriesz.kernels import Kernel
from polyriesz.optimize import (
    OBJECTIVE_PR,
    OptimizationConfig,
    _step_cap,
    export_trace,
    optimize,
    optimize_Pr_derivative_free,
    run_restarts,
    shape_distance,
    shape_distance_to_regular,
)


def perturbed_hexagon(amplitude=0.08, seed=4):
    base = regular_ngon(6, area=math.pi)
    noise = np.random.default_rng(seed).uniform(-amplitude, amplitude, base.vertices.shape)
    return Polygon(base.vertices + noise)


class TestShapeDistance:
    def test_invariances(self):
        P = random_polygon(6, 3)
        moved = translate(rotate(scale(P, 1.8), 0.9), (4.0, -1.0))
        assert shape_distance(P, moved) < 1e-10
        relabeled = Polygon(np.roll(P.vertices, 2, axis=0))
        assert shape_distance(P, relabeled) < 1e-10
        assert shape_distance(P, reflect(P)) < 1e-10

    def test_regular(self):
        assert shape_distance_to_regular(regular_ngon(7, area=2.0, phase=0.4)) < 1e-10
        assert shape_distance_to_regular(random_polygon(7, 1)) > 1e-2

    def test_vertex_count_mismatch(self):
        with pytest.raises(ValueError):
            shape_distance(regular_ngon(5, area=1.0), regular_ngon(6, area=1.0))


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            OptimizationConfig()
        with pytest.raises(ValueError):
            OptimizationConfig(kernel=Kernel.power(2), direction="sideways")
        with pytest.raises(ValueError):
            OptimizationConfig(objective=OBJECTIVE_PR)
        with pytest.raises(ValueError):
            OptimizationConfig(kernel=Kernel.power(2), area_target=0.0)

    def test_describe(self):
        out = OptimizationConfig(kernel=Kernel.power(6)).describe()
        assert out["kernel"] == "power:k=6"
        assert out["area_target"] == pytest.approx(math.pi)


class TestGradientPath:
    def test_minimizing_power2_recovers_regular_hexagon(self):
        cfg = OptimizationConfig(kernel=Kernel.power(2), max_iters=800)
        start = perturbed_hexagon()
        trace = optimize(start, cfg)
        assert abs(area(trace.final) - math.pi) < 1e-8
        assert trace.shape_distance_to_regular < 1e-3
        assert trace.final_objective < J(start, Kernel.power(2)).value * (math.pi / area(start)) ** 3

    def test_merit_decreases_within_each_outer_iteration(self):
        cfg = OptimizationConfig(kernel=Kernel.power(6), max_iters=200)
        trace = optimize(perturbed_hexagon(), cfg)
        for _, group in groupby(trace.records, key=lambda r: r.outer):
            merits = [r.merit for r in group if math.isfinite(r.merit)]
            assert all(b <= a + 1e-12 * abs(a) for a, b in zip(merits, merits[1:]))

    def test_start_is_rescaled_to_target_area(self):
        cfg = OptimizationConfig(kernel=Kernel.power(2), max_iters=0)
        trace = optimize(scale(perturbed_hexagon(), 2.0), cfg)
        assert area(trace.final) == pytest.approx(math.pi)
        assert not trace.converged
        assert trace.notes

    def test_maximizing_heat_energy(self):
        cfg = OptimizationConfig(kernel=Kernel.truncated_heat(12, 1.0), direction="max",
                                 area_target=0.5, max_iters=150)
        start = scale(perturbed_hexagon(), math.sqrt(0.5 / math.pi))
        trace = optimize(start, cfg)
        K = Kernel.truncated_heat(12, 1.0)
        assert trace.final_objective >= J(scale_to_area(start, 0.5), K).value - 1e-12
        assert shape_distance_to_regular(trace.final) < shape_distance_to_regular(start)

    def test_step_cap(self):
        P = regular_ngon(4, circumradius=1.0)
        d = np.zeros(8)
        d[0] = 2.0
        # the first vertex may move a quarter of its sqrt(2) sides
        assert _step_cap(P, d, 0.25) == pytest.approx(0.25 * math.sqrt(2.0) / 2.0)
        assert _step_cap(P, 0.01 * d, 0.25) == 1.0

    def test_near_coincident_vertices_separate(self):
        angles = np.array([0.0, 1.3, 2.6, 2.609, 4.5])
        start = Polygon(np.column_stack([np.cos(angles), np.sin(angles)]))
        cfg = OptimizationConfig(kernel=Kernel.power(8), max_iters=300)
        trace = optimize(start, cfg)
        rescaled = scale_to_area(start, math.pi)
        K = Kernel.power(8)
        assert J(scale_to_area(trace.final, math.pi), K).value <= J(rescaled, K).value
        assert side_lengths(trace.final).min() > side_lengths(rescaled).min()
        assert shape_distance_to_regular(trace.final) < shape_distance_to_regular(rescaled)

    def test_rotated_start_reaches_same_shape(self):
        cfg = OptimizationConfig(kernel=Kernel.power(2), max_iters=800)
        start = perturbed_hexagon()
        a = optimize(start, cfg)
        b = optimize(rotate(start, 0.7), cfg)
        assert b.final_objective == pytest.approx(a.final_objective, rel=1e-6)
        assert shape_distance(a.final, b.final) < 1e-3

    def test_characteristic_kernel_rejected(self, regular_hexagon):
        cfg = OptimizationConfig(kernel=Kernel.characteristic(0.5))
        with pytest.raises(KernelCapabilityError):
            optimize(regular_hexagon, cfg)


class TestDerivativeFree:
    def test_pattern_search_does_not_increase(self):
        cfg = OptimizationConfig(objective=OBJECTIVE_PR, r=0.5, max_iters=2, pr_depth=4,
                                 pattern_step=0.05)
        start = perturbed_hexagon(0.05)
        trace = optimize_Pr_derivative_free(start, 0.5, cfg)
        assert area(trace.final) == pytest.approx(math.pi)
        objectives = [r.objective for r in trace.records]
        assert all(b <= a for a, b in zip(objectives, objectives[1:]))
        assert objectives[0] == pytest.approx(P_r(scale_to_area(start, math.pi), 0.5, depth=4))

    def test_dispatch_from_optimize(self):
        cfg = OptimizationConfig(objective=OBJECTIVE_PR, r=0.5, max_iters=0, pr_depth=3)
        trace = optimize(regular_ngon(5, area=math.pi), cfg)
        assert len(trace.records) == 1
        assert trace.records[0].grad_norm == cfg.pattern_step

    def test_pattern_search_at_symmetry_breaking_radius(self):
        cfg = OptimizationConfig(objective=OBJECTIVE_PR, r=2.18, max_iters=1, pr_depth=4,
                                 pattern_step=0.02)
        start = perturbed_hexagon(0.03)
        trace = optimize(start, cfg)
        objectives = [r.objective for r in trace.records]
        assert all(b <= a for a, b in zip(objectives, objectives[1:]))
        assert area(trace.final) == pytest.approx(math.pi)
        assert trace.config.r == 2.18


class TestRestartsAndExport:
    def test_restarts_in_seed_order(self):
        cfg = OptimizationConfig(kernel=Kernel.power(2), max_iters=20)
        traces = run_restarts(5, cfg, [3, 1])
        assert [t.config.seed for t in traces] == [3, 1]
        assert all(t.final.n == 5 for t in traces)

    def test_same_seed_same_trace(self):
        cfg = OptimizationConfig(kernel=Kernel.power(2), max_iters=30)
        a, = run_restarts(5, cfg, [7])
        b, = run_restarts(5, cfg, [7])
        assert [r.objective for r in a.records] == [r.objective for r in b.records]
        np.testing.assert_array_equal(a.final.vertices, b.final.vertices)

    @pytest.mark.parametrize("n", [5, 7])
    def test_seed_one_converges(self, n):
        trace, = run_restarts(n, OptimizationConfig(kernel=Kernel.power(6)), [1])
        assert trace.converged
        assert trace.shape_distance_to_regular < 1e-4

    def test_export(self, tmp_path):
        cfg = OptimizationConfig(kernel=Kernel.power(2), max_iters=10)
        trace = optimize(perturbed_hexagon(), cfg)
        paths = export_trace(trace, str(tmp_path), "run", svg=True)
        assert set(paths) == {"csv", "json", "svg"}
        header = (tmp_path / "run.csv").read_text().splitlines()[0]
        assert header == "iteration,outer,objective,violation,grad_norm,merit"
        data = json.loads((tmp_path / "run.json").read_text())
        assert len(data["final_polygon"]["vertices"]) == 6
        assert data["config"]["kernel"] == "power:k=2"

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [5, 6, 7])
    @pytest.mark.parametrize("k", [6, 8])
    def test_reproduction(self, n, k):
        cfg = OptimizationConfig(kernel=Kernel.power(k))
        traces = run_restarts(n, cfg, range(10))
        assert all(t.shape_distance_to_regular < 1e-4 for t in traces)
