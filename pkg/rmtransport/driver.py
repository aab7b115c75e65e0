"""
Time stepping with the two-level second-moment iteration.

On every step the low-order problem is first solved with the closure and corrections carried over from the
previous step. Then transport sweeps and low-order solves alternate until successive low-order cell-average
scalar fluxes agree to the tolerance, sharpened with the estimated spectral radius of the iteration.
"""
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple
import logging

import numpy as np

from .approximations import MethodKind, PersistedState, create_approximation
from .errors import NonConvergenceError
from .grid import AngularQuadrature, BoundaryAndInitial, MaterialField, SlabMesh
from .losm import (LowOrderState, assemble_and_solve, balance_residual, compute_corrections, inflow_moments,
                   transport_moments)
from .transport import TransportState, compute_closure_factors, sweep_all

logger = logging.getLogger(__name__)

VALUE_BYTES = 8
HARD_FLOOR = 1e-2
ZERO_FLUX = 1e-300


@dataclass
class IterationControl:
    """
    Stopping parameters of the two-level iteration.

    Attributes
    ----------
    tolerance : float
        Convergence tolerance on the low-order cell-average scalar flux.
    max_iterations : int
        Maximum number of transport sweeps per step.
    relative : bool
        Measure differences relative to the largest |phi_bar| of the new iterate.
    """
    tolerance: float = 1e-8
    max_iterations: int = 200
    relative: bool = True


@dataclass
class IterationLog:
    """
    Difference norms and spectral-radius estimates of one step.

    The iteration count includes the low-order solve with the carried-over closure, so it is one more than
    the number of transport sweeps.
    """
    time_change: float = 0.0
    differences: List[float] = field(default_factory=list)
    rhos: List[float] = field(default_factory=list)

    @property
    def sweeps(self) -> int:
        return len(self.differences)

    @property
    def iterations(self) -> int:
        return self.sweeps + 1


@dataclass
class StepResult:
    step_index: int
    time: float
    low_order: LowOrderState
    transport: TransportState
    iterations: int
    balance_residual: float
    rate: np.ndarray
    log: IterationLog


def convergence_check(difference: float, history: List[float], tolerance: float) -> Tuple[bool, Optional[float]]:
    """
    Decides whether the iteration can stop.

    Parameters
    ----------
    difference : float
        Norm of the latest change of the iterate.
    history : list of float
        Earlier difference norms of the same step, oldest first.
    tolerance : float
        The tolerance epsilon.

    Returns
    -------
    tuple
        (stop, rho). Without a previous difference, rho is None and the test is difference < epsilon.
        Otherwise rho = difference / previous and the test is difference < epsilon (1 / rho - 1); when
        rho >= 1 only a difference below 1e-2 epsilon stops.
    """
    if not history:
        return difference < tolerance, None
    previous = history[-1]
    if previous == 0.0:
        return True, 0.0
    rho = difference / previous
    if rho >= 1.0:
        return difference < HARD_FLOOR * tolerance, rho
    threshold = np.inf if rho == 0.0 else tolerance * (1.0 / rho - 1.0)
    return difference < threshold, rho


def angular_values(method: MethodKind, cell_count: int, direction_count: int) -> int:
    """Angular-flux values persisted between steps."""
    factor = 2 if method.stores_slope else 1
    return factor * cell_count * direction_count


def persisted_bytes(method: MethodKind, cell_count: int, direction_count: int, value_bytes: int = VALUE_BYTES) -> int:
    """
    Size in bytes of the data a method carries across a time step.

    Besides the angular payload, every method stores the low-order moments (4 I), closure factors
    (2 I + I + 1), consistency corrections (3 (I + 1) + I) and the incoming flux (M).
    """
    overhead = 4 * cell_count + (3 * cell_count + 1) + (4 * cell_count + 3) + direction_count
    return (angular_values(method, cell_count, direction_count) + overhead) * value_bytes


def lambda_rate(current: np.ndarray, previous: np.ndarray, dt: float) -> np.ndarray:
    """
    Relative rate of change (phi^n - phi^{n-1}) / (dt phi^n), in 1/ns; 0 where |phi^n| < 1e-300.
    """
    current = np.asarray(current, dtype=float)
    previous = np.asarray(previous, dtype=float)
    safe = np.abs(current) >= ZERO_FLUX
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = (current - previous) / (dt * current)
    return np.where(safe, rate, 0.0)


class TimeStepper:
    """
    Advances one problem in time with one method.

    Parameters
    ----------
    mesh, quadrature, materials, boundary
        Problem definition.
    method : MethodKind
        Treatment of the previous-step slope.
    speed : float
        Particle speed, cm/ns.
    control : IterationControl, optional
    threads : int
        Worker threads for the transport sweep.
    """

    def __init__(self, mesh: SlabMesh, quadrature: AngularQuadrature, materials: MaterialField,
                 boundary: BoundaryAndInitial, method: MethodKind, speed: float,
                 control: IterationControl = None, threads: int = 1):
        self.mesh = mesh
        self.quadrature = quadrature
        self.materials = materials
        self.boundary = boundary
        self.method = method
        self.speed = speed
        self.control = control or IterationControl()
        self.threads = threads
        self.approximation = create_approximation(method)
        self.persisted = None

    def initial_state(self) -> PersistedState:
        """Persisted data built from the initial condition, including its exact slope."""
        state = TransportState(np.array(self.boundary.initial_mean), np.array(self.boundary.initial_slope))
        incoming = self.boundary.incoming(0)
        closure = compute_closure_factors(state, self.quadrature, incoming)
        return PersistedState(
            previous_mean=state.mean,
            previous_slope=state.slope,
            low_order=transport_moments(state, self.quadrature),
            closure=closure,
            corrections=compute_corrections(state, self.quadrature, incoming, closure),
            incoming=np.array(incoming),
        )

    def _difference(self, new: LowOrderState, old: LowOrderState) -> float:
        difference = float(np.max(np.abs(new.scalar_mean - old.scalar_mean)))
        if self.control.relative:
            difference /= max(float(np.max(np.abs(new.scalar_mean))), np.finfo(float).tiny)
        return difference

    def advance_step(self, persisted: PersistedState, dt: float, step_index: int) -> Tuple[StepResult, PersistedState]:
        """
        Advances the solution over one time step.

        Parameters
        ----------
        persisted : PersistedState
            Data carried over from the previous step (or the initial condition).
        dt : float
            Time step, ns.
        step_index : int
            Index n >= 1 of the step.

        Returns
        -------
        tuple
            The converged StepResult and the PersistedState for the next step.

        Raises
        ------
        NonConvergenceError
            If the iteration does not stop within ``max_iterations`` sweeps.
        """
        materials = self.materials.at(step_index)
        incoming = self.boundary.incoming(step_index)
        inflow = inflow_moments(self.quadrature, incoming)
        self.approximation.start_step(persisted, self.quadrature)

        low_order = assemble_and_solve(self.mesh, materials, inflow, persisted.low_order, persisted.closure,
                                       persisted.corrections, dt, self.speed)
        log = IterationLog(time_change=self._difference(low_order, persisted.low_order))
        while True:
            if log.sweeps >= self.control.max_iterations:
                message = (f"Step {step_index} of method {self.method.value} did not converge in "
                           f"{self.control.max_iterations} transport sweeps")
                logger.error(message)
                raise NonConvergenceError(message, step_index, log.differences)
            previous_fsm = self.approximation.effective_previous_fsm(low_order)
            transport = sweep_all(self.mesh, self.quadrature, materials, incoming, persisted.previous_mean,
                                  previous_fsm, low_order.scalar_mean, low_order.scalar_slope, dt, self.speed,
                                  threads=self.threads)
            closure = compute_closure_factors(transport, self.quadrature, incoming)
            corrections = compute_corrections(transport, self.quadrature, incoming, closure)
            updated = assemble_and_solve(self.mesh, materials, inflow, persisted.low_order, closure, corrections,
                                         dt, self.speed)
            difference = self._difference(updated, low_order)
            stop, rho = convergence_check(difference, log.differences, self.control.tolerance)
            log.differences.append(difference)
            if rho is not None:
                log.rhos.append(rho)
            logger.debug(f"step {step_index} sweep {log.sweeps}: difference {difference:.3e}, rho {rho}")
            low_order = updated
            if stop:
                break

        result = StepResult(
            step_index=step_index,
            time=step_index * dt,
            low_order=low_order,
            transport=transport,
            iterations=log.iterations,
            balance_residual=balance_residual(self.mesh, materials, inflow, persisted.low_order, low_order,
                                              corrections, dt, self.speed),
            rate=lambda_rate(low_order.scalar_mean, persisted.low_order.scalar_mean, dt),
            log=log,
        )
        carried = PersistedState(
            previous_mean=transport.mean,
            previous_slope=transport.slope if self.method.stores_slope else None,
            low_order=low_order,
            closure=closure,
            corrections=corrections,
            incoming=np.array(incoming),
        )
        return result, carried

    def run(self, dt: float, step_count: int) -> Iterator[StepResult]:
        """Yields the result of every step n = 1..step_count."""
        persisted = self.initial_state()
        for step_index in range(1, step_count + 1):
            result, persisted = self.advance_step(persisted, dt, step_index)
            self.persisted = persisted
            yield result
