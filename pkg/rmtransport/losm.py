"""
Low-order second-moment (LOSM) equations.

The four unknowns of cell i are the cell-average and first-moment of the scalar flux and of the current,
u_i = (phi_bar, phi_hat, J_bar, J_hat). The cell equations are the 0th and 1st angular moments of the two
LD-BE moment equations of the transport scheme. Edge currents and edge scalar fluxes are written as the
sum of upwind half-range integrals of P1 angular fluxes built from the adjacent low-order corner values plus an
additive correction computed from the latest transport iterate, and the mu^2 moments are expressed with the
closure F. With corrections and F taken from a transport solution, the moments of that solution satisfy the
system exactly.
"""
from dataclasses import dataclass
import logging

import numpy as np

from .grid import AngularQuadrature, MaterialField, SlabMesh
from .linalg import solve_block_tridiagonal
from .transport import ClosureFactors, TransportState, compute_closure_factors, edge_fluxes

logger = logging.getLogger(__name__)

# weights of the right and left edge quantity in each cell row; rows 0-1 use the current, rows 2-3 the
# mu^2 moment
RIGHT_EDGE_WEIGHTS = np.array([1.0, 3.0, 1.0, 3.0])
LEFT_EDGE_WEIGHTS = np.array([-1.0, 3.0, -1.0, 3.0])


@dataclass(frozen=True)
class LowOrderState:
    """
    Per-cell moments of the scalar flux and the current, shape (I,) each.
    """
    scalar_mean: np.ndarray
    scalar_slope: np.ndarray
    current_mean: np.ndarray
    current_slope: np.ndarray

    @classmethod
    def from_blocks(cls, blocks: np.ndarray) -> "LowOrderState":
        return cls(*(np.array(blocks[:, k]) for k in range(4)))

    @classmethod
    def zeros(cls, cell_count: int) -> "LowOrderState":
        return cls.from_blocks(np.zeros((cell_count, 4)))

    def as_blocks(self) -> np.ndarray:
        return np.column_stack([self.scalar_mean, self.scalar_slope, self.current_mean, self.current_slope])

    @property
    def scalar_left(self) -> np.ndarray:
        return self.scalar_mean - self.scalar_slope

    @property
    def scalar_right(self) -> np.ndarray:
        return self.scalar_mean + self.scalar_slope

    @property
    def current_left(self) -> np.ndarray:
        return self.current_mean - self.current_slope

    @property
    def current_right(self) -> np.ndarray:
        return self.current_mean + self.current_slope


@dataclass(frozen=True)
class InflowMoments:
    """Half-range moments of the prescribed incoming flux at x_0 (mu > 0) and x_I (mu < 0)."""
    left_flux: float
    left_current: float
    right_flux: float
    right_current: float


@dataclass(frozen=True)
class ConsistencyCorrections:
    """
    Exact transport moment minus its low-order surrogate.

    Attributes
    ----------
    edge_current, edge_flux, edge_pressure : numpy.ndarray
        Corrections at x_0..x_I, shape (I + 1,).
    cell_pressure : numpy.ndarray
        Correction of the cell-average mu^2 moment, shape (I,).
    """
    edge_current: np.ndarray
    edge_flux: np.ndarray
    edge_pressure: np.ndarray
    cell_pressure: np.ndarray

    @classmethod
    def zeros(cls, cell_count: int) -> "ConsistencyCorrections":
        return cls(np.zeros(cell_count + 1), np.zeros(cell_count + 1), np.zeros(cell_count + 1),
                   np.zeros(cell_count))


@dataclass(frozen=True)
class LowOrderSystem:
    """Blocks of the assembled LOSM system, shapes (I, 4, 4) and (I, 4)."""
    lower: np.ndarray
    diagonal: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray


def inflow_moments(quadrature: AngularQuadrature, incoming: np.ndarray) -> InflowMoments:
    """Half-range flux and current of the incoming boundary flux."""
    positive, negative = quadrature.positive, quadrature.negative
    w, mu = quadrature.weights, quadrature.directions
    return InflowMoments(
        left_flux=float(w[positive] @ incoming[positive]),
        left_current=float((w * mu)[positive] @ incoming[positive]),
        right_flux=float(w[negative] @ incoming[negative]),
        right_current=float((w * mu)[negative] @ incoming[negative]),
    )


def _edge_operators(cell_count: int):
    """
    Linear part of the edge surrogates.

    Returns (current_left, current_right, flux_left, flux_right), each of shape (I + 1, 4): the row that
    multiplies the unknowns of the cell left (right) of each edge. Every edge takes the mu > 0 half-range from
    a P1 angular flux built from the right corner of the cell on its left and the mu < 0 half-range from the
    left corner of the cell on its right; the prescribed inflow replaces the missing half at x_0 and x_I.
    """
    edges = cell_count + 1
    current_left = np.zeros((edges, 4))
    current_right = np.zeros((edges, 4))
    flux_left = np.zeros((edges, 4))
    flux_right = np.zeros((edges, 4))

    # mu > 0 from the right corner: int_0^1 mu psi = J_R / 2 + phi_R / 4, int_0^1 psi = phi_R / 2 + 3 J_R / 4
    current_left[1:] = [0.25, 0.25, 0.5, 0.5]
    flux_left[1:] = [0.5, 0.5, 0.75, 0.75]
    # mu < 0 from the left corner: int_{-1}^0 mu psi = J_L / 2 - phi_L / 4, int_{-1}^0 psi = phi_L / 2 - 3 J_L / 4
    current_right[:-1] = [-0.25, 0.25, 0.5, -0.5]
    flux_right[:-1] = [0.5, -0.5, -0.75, 0.75]
    return current_left, current_right, flux_left, flux_right


def _apply_edges(left: np.ndarray, right: np.ndarray, blocks: np.ndarray) -> np.ndarray:
    """Evaluates an edge operator on cell blocks, shape (I + 1,)."""
    values = np.zeros(left.shape[0])
    values[1:] += np.einsum("ek,ek->e", left[1:], blocks)
    values[:-1] += np.einsum("ek,ek->e", right[:-1], blocks)
    return values


def _inflow_edges(cell_count: int, inflow: InflowMoments):
    current = np.zeros(cell_count + 1)
    flux = np.zeros(cell_count + 1)
    current[0], current[-1] = inflow.left_current, inflow.right_current
    flux[0], flux[-1] = inflow.left_flux, inflow.right_flux
    return current, flux


def transport_moments(state: TransportState, quadrature: AngularQuadrature) -> LowOrderState:
    """
    Angular moments of a transport state.

    Returns
    -------
    LowOrderState
        phi = sum_m w_m psi_m and J = sum_m w_m mu_m psi_m for the cell average and the first moment.
    """
    w, mu = quadrature.weights, quadrature.directions
    return LowOrderState(w @ state.mean, w @ state.slope, (w * mu) @ state.mean, (w * mu) @ state.slope)


def compute_corrections(state: TransportState, quadrature: AngularQuadrature, incoming: np.ndarray,
                        closure: ClosureFactors = None) -> ConsistencyCorrections:
    """
    Additive corrections that make the low-order edge closures exact for a transport state.

    Parameters
    ----------
    state : TransportState
        Latest transport iterate.
    quadrature : AngularQuadrature
    incoming : numpy.ndarray
        Incoming flux per direction, shape (M,).
    closure : ClosureFactors, optional
        Closure of the same state, computed when not given.

    Returns
    -------
    ConsistencyCorrections
    """
    if closure is None:
        closure = compute_closure_factors(state, quadrature, incoming)
    cell_count = state.mean.shape[1]
    w, mu = quadrature.weights, quadrature.directions
    edges = edge_fluxes(state, quadrature, incoming)
    exact_current = (w * mu) @ edges
    exact_flux = w @ edges
    exact_pressure = (w * mu ** 2) @ edges

    moments = transport_moments(state, quadrature)
    blocks = moments.as_blocks()
    current_left, current_right, flux_left, flux_right = _edge_operators(cell_count)
    inflow_current, inflow_flux = _inflow_edges(cell_count, inflow_moments(quadrature, incoming))
    surrogate_current = _apply_edges(current_left, current_right, blocks) + inflow_current
    surrogate_flux = _apply_edges(flux_left, flux_right, blocks) + inflow_flux

    cell_pressure = (w * mu ** 2) @ state.mean - (moments.scalar_mean / 3.0 - closure.mean)
    return ConsistencyCorrections(
        edge_current=exact_current - surrogate_current,
        edge_flux=exact_flux - surrogate_flux,
        edge_pressure=exact_pressure - (exact_flux / 3.0 - closure.edges),
        cell_pressure=cell_pressure,
    )


def assemble(mesh: SlabMesh, materials: MaterialField, inflow: InflowMoments, previous: LowOrderState,
             closure: ClosureFactors, corrections: ConsistencyCorrections, dt: float,
             speed: float) -> LowOrderSystem:
    """
    Assembles the block-tridiagonal LOSM system of one iteration.

    Cell i contributes the rows

    * dx (tau + sigma_a) phi_bar + J_{i+1/2} - J_{i-1/2} = dx (q_bar + tau phi_bar_prev)
    * dx (tau + sigma_a) phi_hat - 6 J_bar + 3 (J_{i+1/2} + J_{i-1/2}) = dx (q_hat + tau phi_hat_prev)
    * dx (tau + sigma_t) J_bar + K_{i+1/2} - K_{i-1/2} = dx tau J_bar_prev
    * dx (tau + sigma_t) J_hat + 3 (K_{i+1/2} + K_{i-1/2}) - 6 K_bar = dx tau J_hat_prev

    with tau = 1 / (v dt), K = phi / 3 - F + correction the mu^2 moment. Closure factors and corrections
    only enter the right-hand side.
    """
    cell_count = mesh.cell_count
    dx = mesh.widths
    tau = 1.0 / (speed * dt)
    current_left, current_right, flux_left, flux_right = _edge_operators(cell_count)
    inflow_current, inflow_flux = _inflow_edges(cell_count, inflow)

    edge_current = inflow_current + corrections.edge_current
    edge_flux = inflow_flux + corrections.edge_flux
    edge_pressure = edge_flux / 3.0 - closure.edges + corrections.edge_pressure

    operator_left = np.stack([current_left, current_left, flux_left / 3.0, flux_left / 3.0], axis=1)
    operator_right = np.stack([current_right, current_right, flux_right / 3.0, flux_right / 3.0], axis=1)
    constants = np.stack([edge_current, edge_current, edge_pressure, edge_pressure], axis=1)

    local = np.zeros((cell_count, 4, 4))
    local[:, 0, 0] = dx * (tau + materials.sigma_a)
    local[:, 1, 1] = dx * (tau + materials.sigma_a)
    local[:, 1, 2] = -6.0
    local[:, 2, 2] = dx * (tau + materials.sigma_t)
    local[:, 3, 3] = dx * (tau + materials.sigma_t)
    local[:, 3, 0] = -2.0

    right_weights = RIGHT_EDGE_WEIGHTS[:, None]
    left_weights = LEFT_EDGE_WEIGHTS[:, None]
    diagonal = local + right_weights * operator_left[1:] + left_weights * operator_right[:-1]
    upper = right_weights * operator_right[1:]
    lower = left_weights * operator_left[:-1]

    rhs = np.column_stack([
        dx * (materials.source_mean + tau * previous.scalar_mean),
        dx * (materials.source_slope + tau * previous.scalar_slope),
        dx * tau * previous.current_mean,
        dx * tau * previous.current_slope - 6.0 * closure.mean + 6.0 * corrections.cell_pressure,
    ])
    rhs = rhs - RIGHT_EDGE_WEIGHTS * constants[1:] - LEFT_EDGE_WEIGHTS * constants[:-1]
    return LowOrderSystem(lower, diagonal, upper, rhs)


def assemble_and_solve(mesh: SlabMesh, materials: MaterialField, inflow: InflowMoments, previous: LowOrderState,
                       closure: ClosureFactors, corrections: ConsistencyCorrections, dt: float,
                       speed: float) -> LowOrderState:
    """
    Assembles and solves the LOSM system for the scalar-flux and current moments of the current step.

    Parameters
    ----------
    mesh, materials
        Grid and cross sections of the step.
    inflow : InflowMoments
        Half-range moments of the incoming boundary flux.
    previous : LowOrderState
        Converged low-order moments of the previous step.
    closure : ClosureFactors
        Closure of the latest transport iterate (or the one carried over from the previous step).
    corrections : ConsistencyCorrections
        Corrections of the same transport iterate.
    dt, speed : float
        Time step (ns) and particle speed (cm/ns).

    Returns
    -------
    LowOrderState

    Raises
    ------
    SingularSystemError
        If a pivot block of the elimination is singular.
    """
    system = assemble(mesh, materials, inflow, previous, closure, corrections, dt, speed)
    blocks = solve_block_tridiagonal(system.lower, system.diagonal, system.upper, system.rhs)
    return LowOrderState.from_blocks(blocks)


def boundary_currents(state: LowOrderState, inflow: InflowMoments, corrections: ConsistencyCorrections):
    """Net currents (J at x_0, J at x_I) given by the low-order edge closure."""
    current_left, current_right, _, _ = _edge_operators(state.scalar_mean.size)
    blocks = state.as_blocks()
    left = float(current_right[0] @ blocks[0]) + inflow.left_current + corrections.edge_current[0]
    right = float(current_left[-1] @ blocks[-1]) + inflow.right_current + corrections.edge_current[-1]
    return left, right


def balance_residual(mesh: SlabMesh, materials: MaterialField, inflow: InflowMoments, previous: LowOrderState,
                     current: LowOrderState, corrections: ConsistencyCorrections, dt: float,
                     speed: float) -> float:
    """
    Relative global particle-balance residual of a converged step.

    The terms are the change of the particle content (Phi^n - Phi^{n-1}) / (v dt) with Phi = sum dx phi_bar,
    the net leakage J(x_I) - J(x_0), absorption and the external source. The residual is normalised by the
    largest term.
    """
    dx = mesh.widths
    left, right = boundary_currents(current, inflow, corrections)
    terms = np.array([
        float(dx @ (current.scalar_mean - previous.scalar_mean)) / (speed * dt),
        right,
        -left,
        float(dx @ (materials.sigma_a * current.scalar_mean)),
        -float(dx @ materials.source_mean),
    ])
    scale = np.max(np.abs(terms))
    if scale == 0.0:
        return 0.0
    return float(abs(np.sum(terms)) / scale)
