"""
High-order transport sweep for the linear-discontinuous, backward-Euler discretization.

Each cell carries, per direction, the cell average and the first spatial moment (slope) of the angular flux.
A sweep visits the cells in the direction of particle flight and solves one 2x2 system per cell and
direction, closing the outgoing edge value with the upwind corner value.

Angular arrays are direction-major, shape (M, I).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional
import logging

import numpy as np

from .errors import ConfigurationError, SingularSystemError
from .grid import AngularQuadrature, MaterialField, SlabMesh

logger = logging.getLogger(__name__)

SINGULAR_DETERMINANT = 1e-300


@dataclass(frozen=True)
class TransportState:
    """
    Cell-average and slope of the angular flux at one time level.

    Attributes
    ----------
    mean : numpy.ndarray
        Cell-average angular flux, shape (M, I).
    slope : numpy.ndarray
        First spatial moment of the angular flux, shape (M, I).
    """
    mean: np.ndarray
    slope: np.ndarray

    @classmethod
    def zeros(cls, direction_count: int, cell_count: int) -> "TransportState":
        return cls(np.zeros((direction_count, cell_count)), np.zeros((direction_count, cell_count)))


def corner_values(state: TransportState):
    """
    Returns the discontinuous corner values (psi_L, psi_R) = (mean - slope, mean + slope).
    """
    return state.mean - state.slope, state.mean + state.slope


@dataclass(frozen=True)
class EffectivePreviousFSM:
    """
    The previous-step slope that enters the slope equation of the sweep.

    Exactly one representation is active: either a dense array of slopes, shape (M, I), or a per-cell pair of
    coefficients (c_mean, c_slope), shape (I,) each, meaning slope* = c_mean * mean^n + c_slope * slope^n in
    terms of the unknowns of the current step. Coefficients are shared by all directions of a cell.
    """
    dense: Optional[np.ndarray] = None
    mean_coefficient: Optional[np.ndarray] = None
    slope_coefficient: Optional[np.ndarray] = None

    def __post_init__(self):
        has_coefficients = self.mean_coefficient is not None and self.slope_coefficient is not None
        if (self.dense is not None) == has_coefficients:
            raise ConfigurationError("Exactly one previous-slope representation must be given.")

    @classmethod
    def from_slope(cls, slope: np.ndarray) -> "EffectivePreviousFSM":
        return cls(dense=np.asarray(slope, dtype=float))

    @classmethod
    def from_coefficients(cls, mean_coefficient, slope_coefficient) -> "EffectivePreviousFSM":
        return cls(mean_coefficient=np.asarray(mean_coefficient, dtype=float),
                   slope_coefficient=np.asarray(slope_coefficient, dtype=float))

    @property
    def is_coefficient_form(self) -> bool:
        return self.dense is None


@dataclass(frozen=True)
class ClosureFactors:
    """
    Moments of F = sum_m w_m (1/3 - mu_m^2) psi_m.

    Attributes
    ----------
    mean, slope : numpy.ndarray
        Cell-average and first-moment values, shape (I,).
    edges : numpy.ndarray
        Values built from the upwinded edge fluxes at x_0..x_I, shape (I + 1,).
    """
    mean: np.ndarray
    slope: np.ndarray
    edges: np.ndarray


def sweep_cell(mu, incoming, previous_mean, previous_slope, sigma_t, width, dt, speed, source_mean, source_slope,
               coefficients=None, cell=None, direction=None):
    """
    Solves the two moment equations of one cell for one or several directions of the same sign.

    The outgoing edge flux is eliminated with the upwind relation psi_out = mean + sign(mu) * slope, and the
    resulting 2x2 system is solved with Cramer's rule. All flux arguments broadcast, so a whole half-range
    can be handled in one call.

    Parameters
    ----------
    mu : float or numpy.ndarray
        Direction cosine(s).
    incoming : float or numpy.ndarray
        Edge flux entering the cell (left edge for mu > 0, right edge for mu < 0).
    previous_mean : float or numpy.ndarray
        Cell-average angular flux of the previous time step.
    previous_slope : float or numpy.ndarray
        Previous-step slope, used when ``coefficients`` is None.
    sigma_t : float
        Total cross section, 1/cm.
    width : float
        Cell width, cm.
    dt : float
        Time step, ns.
    speed : float
        Particle speed, cm/ns.
    source_mean, source_slope : float
        Emission density moments (sigma_s * phi + q) / 2.
    coefficients : tuple of float, optional
        (c_mean, c_slope) such that the previous slope is c_mean * mean + c_slope * slope of the current step.
        Their contribution is moved onto the matrix.
    cell, direction : int, optional
        Identify the system in error messages.

    Returns
    -------
    tuple
        (mean, slope, outgoing) for the cell.
    """
    time_coefficient = width / (speed * dt)
    removal = sigma_t * width + time_coefficient
    magnitude = np.abs(mu)
    a11 = removal + magnitude
    a12 = mu
    a21 = -3.0 * mu
    a22 = removal + 3.0 * magnitude
    b1 = width * source_mean + time_coefficient * previous_mean + magnitude * incoming
    b2 = width * source_slope - 3.0 * mu * incoming
    if coefficients is None:
        b2 = b2 + time_coefficient * previous_slope
    else:
        mean_coefficient, slope_coefficient = coefficients
        a21 = a21 - time_coefficient * mean_coefficient
        a22 = a22 - time_coefficient * slope_coefficient
    determinant = a11 * a22 - a12 * a21
    if np.any(np.abs(determinant) < SINGULAR_DETERMINANT):
        message = f"Singular sweep system in cell {cell}, direction {direction}, coefficients {coefficients}"
        logger.error(message)
        raise SingularSystemError(message, cell=cell, direction=direction, coefficients=coefficients)
    mean = (b1 * a22 - a12 * b2) / determinant
    slope = (a11 * b2 - a21 * b1) / determinant
    return mean, slope, mean + np.sign(mu) * slope


def sweep_all(mesh: SlabMesh, quadrature: AngularQuadrature, materials: MaterialField, incoming: np.ndarray,
              previous_mean: np.ndarray, previous_fsm: EffectivePreviousFSM, scalar_mean: np.ndarray,
              scalar_slope: np.ndarray, dt: float, speed: float, threads: int = 1) -> TransportState:
    """
    Sweeps every direction through the mesh with the scattering source built from the given scalar flux.

    Directions with mu > 0 are swept left to right starting from the incoming flux at x_0, the others right
    to left from x_I. With ``threads`` > 1 the directions are distributed over a thread pool; each direction
    writes its own rows of the result, so the output does not depend on the number of threads.

    Parameters
    ----------
    mesh, quadrature, materials
        Phase-space grid and cross sections for the step.
    incoming : numpy.ndarray
        Incoming flux per direction, shape (M,).
    previous_mean : numpy.ndarray
        Cell-average angular flux of the previous step, shape (M, I).
    previous_fsm : EffectivePreviousFSM
        Previous-step slope, dense or in coefficient form.
    scalar_mean, scalar_slope : numpy.ndarray
        Scalar-flux moments defining the scattering source, shape (I,).
    dt, speed : float
        Time step (ns) and particle speed (cm/ns).
    threads : int
        Maximum number of worker threads.

    Returns
    -------
    TransportState
    """
    mean = np.empty((quadrature.count, mesh.cell_count))
    slope = np.empty_like(mean)
    source_mean = 0.5 * (materials.sigma_s * scalar_mean + materials.source_mean)
    source_slope = 0.5 * (materials.sigma_s * scalar_slope + materials.source_slope)

    def sweep(index):
        mu = quadrature.directions[index]
        cells = range(mesh.cell_count) if mu[0] > 0 else range(mesh.cell_count - 1, -1, -1)
        edge_flux = incoming[index]
        for i in cells:
            if previous_fsm.is_coefficient_form:
                coefficients = (previous_fsm.mean_coefficient[i], previous_fsm.slope_coefficient[i])
                previous_slope = 0.0
            else:
                coefficients = None
                previous_slope = previous_fsm.dense[index, i]
            mean[index, i], slope[index, i], edge_flux = sweep_cell(
                mu, edge_flux, previous_mean[index, i], previous_slope, materials.sigma_t[i], mesh.widths[i],
                dt, speed, source_mean[i], source_slope[i], coefficients=coefficients, cell=i,
                direction=index.tolist())

    if threads > 1:
        groups = [np.array([m]) for m in range(quadrature.count)]
        with ThreadPoolExecutor(max_workers=threads) as executor:
            for future in [executor.submit(sweep, group) for group in groups]:
                future.result()
    else:
        for group in (quadrature.positive, quadrature.negative):
            sweep(group)
    return TransportState(mean, slope)


def edge_fluxes(state: TransportState, quadrature: AngularQuadrature, incoming: np.ndarray) -> np.ndarray:
    """
    Upwinded angular flux at every edge x_0..x_I, shape (M, I + 1).

    For mu > 0 the edge value is the right corner of the cell on its left (the incoming flux at x_0); for
    mu < 0 it is the left corner of the cell on its right (the incoming flux at x_I).
    """
    left, right = corner_values(state)
    direction_count, cell_count = state.mean.shape
    edges = np.empty((direction_count, cell_count + 1))
    positive, negative = quadrature.positive, quadrature.negative
    edges[positive, 0] = incoming[positive]
    edges[positive, 1:] = right[positive]
    edges[negative, -1] = incoming[negative]
    edges[negative, :-1] = left[negative]
    return edges


def compute_closure_factors(state: TransportState, quadrature: AngularQuadrature,
                            incoming: np.ndarray) -> ClosureFactors:
    """
    Computes the closure F = sum_m w_m (1/3 - mu_m^2) psi_m for cell moments and edges.

    Parameters
    ----------
    state : TransportState
        Latest transport iterate.
    quadrature : AngularQuadrature
    incoming : numpy.ndarray
        Incoming flux per direction for the current step.

    Returns
    -------
    ClosureFactors
    """
    weight = quadrature.weights * (1.0 / 3.0 - quadrature.directions ** 2)
    return ClosureFactors(mean=weight @ state.mean, slope=weight @ state.slope,
                          edges=weight @ edge_fluxes(state, quadrature, incoming))
