"""
Spatial mesh, angular quadrature, material data and boundary/initial data shared by all solvers.

All arrays held by these types are made read-only at construction, so instances can be shared between
workers without copies.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

NEWTON_TOLERANCE = 1e-15
NEWTON_MAX_ITERATIONS = 100


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SlabMesh:
    """
    Cell edges x_0 < x_1 < ... < x_I of a slab, in cm.

    Attributes
    ----------
    edges : numpy.ndarray
        Edge positions, shape (I + 1,).
    widths : numpy.ndarray
        Cell widths x_i - x_{i-1}, shape (I,).
    centers : numpy.ndarray
        Cell midpoints (x_i + x_{i-1}) / 2, shape (I,).
    """
    edges: np.ndarray
    widths: np.ndarray = field(init=False, repr=False)
    centers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        edges = _frozen(self.edges)
        if edges.ndim != 1 or edges.size < 2:
            raise ConfigurationError("A mesh needs at least two edges.")
        widths = np.diff(edges)
        if not np.all(widths > 0):
            raise ConfigurationError("Mesh edges must be strictly increasing.")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "widths", _frozen(widths))
        object.__setattr__(self, "centers", _frozen(0.5 * (edges[1:] + edges[:-1])))

    @property
    def cell_count(self) -> int:
        return self.widths.size


def build_uniform_mesh(domain_length: float, cell_count: int) -> SlabMesh:
    """
    Builds a mesh of equal-width cells on [0, domain_length].

    Parameters
    ----------
    domain_length : float
        Slab thickness in cm, must be positive.
    cell_count : int
        Number of cells, at least 1.

    Returns
    -------
    SlabMesh
        Mesh whose cells all have width domain_length / cell_count.
    """
    if not domain_length > 0:
        raise ConfigurationError(f"Domain length must be positive, got {domain_length}.")
    if int(cell_count) != cell_count or cell_count < 1:
        raise ConfigurationError(f"Cell count must be a positive integer, got {cell_count}.")
    width = domain_length / cell_count
    edges = width * np.arange(int(cell_count) + 1)
    edges[-1] = domain_length
    return SlabMesh(edges)


@dataclass(frozen=True)
class AngularQuadrature:
    """
    Discrete directions and weights on [-1, 1].

    Directions are stored with the negative half-range first (most grazing last) followed by its mirror
    image, so that direction m and M - 1 - m are opposite.
    """
    directions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        directions = _frozen(self.directions)
        weights = _frozen(self.weights)
        if directions.shape != weights.shape or directions.ndim != 1:
            raise ConfigurationError("Directions and weights must be one-dimensional and of equal length.")
        if np.any(directions == 0.0) or np.any(np.abs(directions) >= 1.0):
            raise ConfigurationError("Directions must lie in (-1, 1) without 0.")
        if not np.array_equal(np.sort(directions), -np.sort(directions)[::-1]):
            raise ConfigurationError("Direction set must be symmetric under mu -> -mu.")
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "weights", weights)

    @property
    def count(self) -> int:
        return self.directions.size

    @property
    def positive(self) -> np.ndarray:
        """Indices of the directions with mu > 0."""
        return np.flatnonzero(self.directions > 0)

    @property
    def negative(self) -> np.ndarray:
        """Indices of the directions with mu < 0."""
        return np.flatnonzero(self.directions < 0)

    def moment(self, power: int) -> float:
        """Returns sum_m w_m mu_m**power."""
        return float(np.sum(self.weights * self.directions ** power))


def _legendre(order: int, x: np.ndarray):
    """Evaluates P_order and its derivative with the three-term recurrence."""
    p_previous = np.ones_like(x)
    p = x.copy()
    for k in range(2, order + 1):
        p_previous, p = p, ((2 * k - 1) * x * p - (k - 1) * p_previous) / k
    if order == 0:
        return p_previous, np.zeros_like(x)
    derivative = order * (x * p - p_previous) / (x ** 2 - 1.0)
    return p, derivative


def gauss_legendre(points: int):
    """
    Gauss-Legendre nodes and weights on [-1, 1].

    The roots of P_points are found with Newton's method started from the Chebyshev-like guess
    cos(pi (k - 1/4) / (points + 1/2)).

    Parameters
    ----------
    points : int
        Number of nodes.

    Returns
    -------
    tuple of numpy.ndarray
        Nodes in increasing order and the matching weights.
    """
    k = np.arange(1, points + 1)
    x = np.cos(np.pi * (k - 0.25) / (points + 0.5))
    for _ in range(NEWTON_MAX_ITERATIONS):
        p, derivative = _legendre(points, x)
        step = p / derivative
        x = x - step
        if np.max(np.abs(step)) < NEWTON_TOLERANCE:
            break
    else:
        logger.warning(f"Newton iteration for {points} Gauss points stopped at the iteration limit.")
    _, derivative = _legendre(points, x)
    weights = 2.0 / ((1.0 - x ** 2) * derivative ** 2)
    order = np.argsort(x)
    return x[order], weights[order]


def build_double_gauss_quadrature(points_per_half: int) -> AngularQuadrature:
    """
    Double Gauss-Legendre set: a Gauss rule mapped onto [0, 1] and mirrored onto [-1, 0].

    Parameters
    ----------
    points_per_half : int
        Number of directions in each half-range; the set has 2 * points_per_half directions.

    Returns
    -------
    AngularQuadrature
    """
    if int(points_per_half) != points_per_half or points_per_half < 1:
        raise ConfigurationError(f"Points per half-range must be a positive integer, got {points_per_half}.")
    nodes, weights = gauss_legendre(int(points_per_half))
    positive = 0.5 * (nodes + 1.0)
    half_weights = 0.5 * weights
    directions = np.concatenate([-positive[::-1], positive])
    return AngularQuadrature(directions, np.concatenate([half_weights[::-1], half_weights]))


@dataclass(frozen=True)
class MaterialField:
    """
    Per-cell cross sections (1/cm) and source moments.

    Attributes
    ----------
    sigma_t, sigma_s : numpy.ndarray
        Total and scattering cross sections, shape (I,).
    source_mean, source_slope : numpy.ndarray
        Cell-average and first spatial moment of the external source, shape (I,).
    """
    sigma_t: np.ndarray
    sigma_s: np.ndarray
    source_mean: np.ndarray
    source_slope: np.ndarray

    def __post_init__(self):
        arrays = [_frozen(getattr(self, name)) for name in ("sigma_t", "sigma_s", "source_mean", "source_slope")]
        if len({array.shape for array in arrays}) != 1:
            raise ConfigurationError("Material arrays must have one entry per cell.")
        sigma_t, sigma_s = arrays[0], arrays[1]
        if np.any(sigma_s < 0) or np.any(sigma_t < sigma_s):
            raise ConfigurationError("Cross sections must satisfy sigma_t >= sigma_s >= 0.")
        for name, array in zip(("sigma_t", "sigma_s", "source_mean", "source_slope"), arrays):
            object.__setattr__(self, name, array)

    @classmethod
    def uniform(cls, mesh: SlabMesh, sigma_t: float, sigma_s: float, source: float = 0.0) -> "MaterialField":
        """Constant cross sections and a spatially constant source (whose first moment is zero)."""
        ones = np.ones(mesh.cell_count)
        return cls(sigma_t * ones, sigma_s * ones, source * ones, np.zeros(mesh.cell_count))

    @property
    def sigma_a(self) -> np.ndarray:
        return self.sigma_t - self.sigma_s

    def at(self, step_index: int) -> "MaterialField":
        """Material data used on a time step. Data are constant in time."""
        return self


@dataclass(frozen=True)
class BoundaryAndInitial:
    """
    Incoming boundary fluxes and initial angular-flux moments.

    Attributes
    ----------
    inflow : numpy.ndarray
        Incoming angular flux per direction, shape (M,): entries with mu > 0 enter at x_0, entries with
        mu < 0 enter at x_I.
    initial_mean, initial_slope : numpy.ndarray
        Cell-average and first spatial moment of the initial angular flux, shape (M, I).
    """
    inflow: np.ndarray
    initial_mean: np.ndarray
    initial_slope: np.ndarray

    def __post_init__(self):
        inflow = _frozen(self.inflow)
        mean, slope = _frozen(self.initial_mean), _frozen(self.initial_slope)
        if mean.shape != slope.shape or mean.ndim != 2 or mean.shape[0] != inflow.size:
            raise ConfigurationError("Initial moments must have shape (directions, cells).")
        if not np.all(np.isfinite(inflow)):
            raise ConfigurationError("Incoming fluxes must be finite.")
        object.__setattr__(self, "inflow", inflow)
        object.__setattr__(self, "initial_mean", mean)
        object.__setattr__(self, "initial_slope", slope)

    @classmethod
    def isotropic(cls, quadrature: AngularQuadrature, mesh: SlabMesh, inflow_left: float, inflow_right: float,
                  initial_flux: float) -> "BoundaryAndInitial":
        """Isotropic incoming fluxes on both faces and a flat isotropic initial flux (zero slope)."""
        inflow = np.where(quadrature.directions > 0, inflow_left, inflow_right)
        shape = (quadrature.count, mesh.cell_count)
        return cls(inflow, np.full(shape, float(initial_flux)), np.zeros(shape))

    def incoming(self, step_index: int) -> np.ndarray:
        """Incoming fluxes on a time step. Data are constant in time."""
        return self.inflow
