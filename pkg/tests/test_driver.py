import unittest

import numpy as np

from rmtransport.approximations import MethodKind
from rmtransport.driver import (IterationControl, TimeStepper, angular_values, convergence_check, lambda_rate,
                                persisted_bytes)
from rmtransport.errors import NonConvergenceError
from rmtransport.grid import BoundaryAndInitial, MaterialField, build_double_gauss_quadrature, build_uniform_mesh
from rmtransport.harness import builtin_problem, with_overrides
from rmtransport.losm import transport_moments
from rmtransport.transport import edge_fluxes

SPEED = 30.0
DT = 0.02


def build_stepper(method, cells=20, sigma_t=0.1, sigma_s=0.05, source=0.0, inflow=(100.0, 0.0), initial=1e-3,
                  control=None, threads=1):
    mesh = build_uniform_mesh(5.0, cells)
    quadrature = build_double_gauss_quadrature(4)
    materials = MaterialField.uniform(mesh, sigma_t, sigma_s, source)
    boundary = BoundaryAndInitial.isotropic(quadrature, mesh, inflow[0], inflow[1], initial)
    return TimeStepper(mesh, quadrature, materials, boundary, method, SPEED, control, threads)


class TestConvergenceCheck(unittest.TestCase):

    def test_rho_sharpened_threshold(self):
        stop, rho = convergence_check(1e-4, [1e-3], 1e-5)
        self.assertAlmostEqual(rho, 0.1, delta=1e-15)
        self.assertFalse(stop)
        stop, _ = convergence_check(1e-4, [1e-3], 2e-5)
        self.assertTrue(stop)

    def test_first_difference(self):
        self.assertEqual(convergence_check(5e-9, [], 1e-8), (True, None))
        self.assertEqual(convergence_check(5e-8, [], 1e-8), (False, None))

    def test_half_contraction_keeps_tolerance(self):
        self.assertEqual(convergence_check(4e-9, [8e-9], 1e-8), (True, 0.5))
        self.assertEqual(convergence_check(1.2e-8, [2.4e-8], 1e-8)[0], False)

    def test_diverging_iteration_uses_hard_floor(self):
        self.assertTrue(convergence_check(2e-11, [1e-11], 1e-8)[0])
        self.assertFalse(convergence_check(1e-9, [1e-10], 1e-8)[0])

    def test_exact_previous_iterate(self):
        self.assertEqual(convergence_check(0.0, [0.0], 1e-8), (True, 0.0))


class TestAccounting(unittest.TestCase):

    def test_angular_payload(self):
        self.assertEqual(angular_values(MethodKind.REFERENCE, 100, 8), 1600)
        self.assertEqual(angular_values(MethodKind.SR_SL, 100, 8), 800)
        for kind in MethodKind:
            if kind is not MethodKind.REFERENCE:
                with self.subTest(kind=kind):
                    self.assertEqual(2 * angular_values(kind, 25, 8), angular_values(MethodKind.REFERENCE, 25, 8))

    def test_bytes_differ_by_the_slope_only(self):
        for cells in (100, 25):
            with self.subTest(cells=cells):
                difference = persisted_bytes(MethodKind.REFERENCE, cells, 8) - persisted_bytes(MethodKind.P1, cells, 8)
                self.assertEqual(difference, cells * 8 * 8)

    def test_bytes_match_persisted_state(self):
        for kind in MethodKind:
            with self.subTest(kind=kind):
                stepper = build_stepper(kind, cells=6)
                for _ in stepper.run(DT, 2):
                    pass
                self.assertEqual(stepper.persisted.nbytes(), persisted_bytes(kind, 6, 8))
                self.assertEqual(stepper.persisted.angular_values, angular_values(kind, 6, 8))


class TestLambdaRate(unittest.TestCase):

    def test_rates(self):
        np.testing.assert_array_equal(lambda_rate([1.0, 3.0], [1.0, 3.0], DT), [0.0, 0.0])
        np.testing.assert_allclose(lambda_rate([2.0], [1.0], DT), [25.0], rtol=1e-14)
        self.assertLess(lambda_rate([0.5], [1.0], DT)[0], 0.0)
        np.testing.assert_array_equal(lambda_rate([0.0, 1e-310], [1.0, 1.0], DT), [0.0, 0.0])


class TestTimeStepper(unittest.TestCase):

    def test_equilibrium_for_every_method(self):
        # q / (2 sigma_a) = 1 on both faces and initially, so phi = 2 everywhere
        solutions = {}
        for kind in MethodKind:
            with self.subTest(kind=kind):
                stepper = build_stepper(kind, cells=10, sigma_t=1.0, sigma_s=0.5, source=1.0, inflow=(1.0, 1.0),
                                        initial=1.0)
                results = list(stepper.run(DT, 10))
                for result in results:
                    np.testing.assert_allclose(result.low_order.scalar_mean, 2.0, rtol=1e-11)
                    self.assertLessEqual(result.iterations, 2)
                    self.assertGreaterEqual(result.iterations, 1)
                solutions[kind] = np.array([result.low_order.scalar_mean for result in results])
        for kind, solution in solutions.items():
            np.testing.assert_allclose(solution, solutions[MethodKind.REFERENCE], rtol=1e-11)

    def test_balance_for_every_method(self):
        for kind in MethodKind:
            with self.subTest(kind=kind):
                for result in build_stepper(kind).run(DT, 5):
                    self.assertLess(result.balance_residual, 1e-10)
                    self.assertTrue(np.all(np.isfinite(result.low_order.as_blocks())))

    def test_reference_self_consistency(self):
        tolerance = 1e-8
        stepper = build_stepper(MethodKind.REFERENCE, control=IterationControl(tolerance=tolerance))
        for result in stepper.run(DT, 5):
            moments = transport_moments(result.transport, stepper.quadrature)
            scale = np.max(np.abs(moments.scalar_mean))
            np.testing.assert_allclose(result.low_order.scalar_mean, moments.scalar_mean, rtol=0.0,
                                       atol=10 * tolerance * scale)

    def test_iteration_log(self):
        for result in build_stepper(MethodKind.REFERENCE).run(DT, 3):
            with self.subTest(step=result.step_index):
                self.assertEqual(result.iterations, result.log.iterations)
                self.assertEqual(result.log.sweeps, result.iterations - 1)
                self.assertEqual(len(result.log.rhos), result.log.sweeps - 1)
                self.assertGreater(result.log.time_change, 0.0)
                self.assertAlmostEqual(result.time, result.step_index * DT, delta=1e-15)

    def test_tighter_tolerance_needs_more_sweeps(self):
        loose = next(build_stepper(MethodKind.REFERENCE, control=IterationControl(tolerance=1e-4)).run(DT, 1))
        tight = next(build_stepper(MethodKind.REFERENCE, control=IterationControl(tolerance=1e-10)).run(DT, 1))
        self.assertGreaterEqual(tight.iterations, loose.iterations)

    def test_diffusive_regime_converges(self):
        for sigma_t, ratio in [(10.0, 0.9), (100.0, 0.9999)]:
            with self.subTest(sigma_t=sigma_t, ratio=ratio):
                stepper = build_stepper(MethodKind.REFERENCE, cells=25, sigma_t=sigma_t, sigma_s=ratio * sigma_t,
                                        source=1e-2, inflow=(0.0, 0.0), initial=1e-3,
                                        control=IterationControl(tolerance=1e-8, relative=False))
                for result in stepper.run(DT, 3):
                    self.assertLessEqual(result.iterations, 10)
                    self.assertTrue(np.all(result.low_order.scalar_mean > 0.0))

    def test_nonconvergence(self):
        stepper = build_stepper(MethodKind.REFERENCE, control=IterationControl(tolerance=1e-30, max_iterations=1))
        with self.assertRaises(NonConvergenceError) as context:
            list(stepper.run(DT, 1))
        self.assertEqual(context.exception.step_index, 1)
        self.assertEqual(len(context.exception.history), 1)

    def test_runs_are_deterministic(self):
        for kind in (MethodKind.SR_SL, MethodKind.BETA_LR):
            with self.subTest(kind=kind):
                first = [result.low_order.as_blocks() for result in build_stepper(kind).run(DT, 4)]
                second = [result.low_order.as_blocks() for result in build_stepper(kind, threads=3).run(DT, 4)]
                np.testing.assert_array_equal(np.array(first), np.array(second))

    def test_first_step_is_shared_by_all_methods(self):
        reference = next(build_stepper(MethodKind.REFERENCE).run(DT, 1))
        for kind in MethodKind:
            with self.subTest(kind=kind):
                result = next(build_stepper(kind).run(DT, 1))
                np.testing.assert_array_equal(result.low_order.scalar_mean, reference.low_order.scalar_mean)


def transport_balance(stepper, result, previous_mean, dt):
    """Global balance of the cell-average transport equations summed over directions."""
    quadrature, widths = stepper.quadrature, stepper.mesh.widths
    materials = stepper.materials.at(result.step_index)
    edges = edge_fluxes(result.transport, quadrature, stepper.boundary.incoming(result.step_index))
    currents = (quadrature.weights * quadrature.directions) @ edges
    scalar = quadrature.weights @ result.transport.mean
    previous = quadrature.weights @ previous_mean
    terms = np.array([
        widths @ (scalar - previous) / (stepper.speed * dt),
        currents[-1],
        -currents[0],
        widths @ (materials.sigma_a * scalar),
        -(widths @ materials.source_mean),
    ])
    return abs(terms.sum()) / np.max(np.abs(terms))


class TestTransportBalance(unittest.TestCase):

    def test_reference_sweep_conserves_particles(self):
        problem = with_overrides(builtin_problem("test-a"), tolerance=1e-12, tolerance_mode="relative")
        stepper = problem.stepper(MethodKind.REFERENCE)
        previous_mean = stepper.boundary.initial_mean
        for result in stepper.run(problem.dt, 10):
            with self.subTest(step=result.step_index):
                self.assertLess(transport_balance(stepper, result, previous_mean, problem.dt), 1e-9)
            previous_mean = result.transport.mean


if __name__ == "__main__":
    unittest.main()
