from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Optional
import logging

import numpy as np

from ..errors import ConfigurationError
from ..grid import AngularQuadrature
from ..losm import ConsistencyCorrections, LowOrderState
from ..transport import ClosureFactors, EffectivePreviousFSM

logger = logging.getLogger(__name__)


class MethodKind(Enum):
    """Treatments of the previous-step slope of the angular flux."""
    REFERENCE = "reference"
    ZERO_SLOPE = "zero-slope"
    P1 = "p1"
    SR_SL = "sr-sl"
    BETA_BAR = "beta-bar"
    BETA_LR = "beta-lr"

    @classmethod
    def from_name(cls, name: str) -> "MethodKind":
        try:
            return cls(name)
        except ValueError:
            known = ", ".join(kind.value for kind in cls)
            raise ConfigurationError(f"Unknown method '{name}', expected one of: {known}") from None

    @property
    def stores_slope(self) -> bool:
        """Only the reference method keeps the angular slope between steps."""
        return self is MethodKind.REFERENCE


@dataclass(frozen=True)
class PersistedState:
    """
    Everything a method carries from one time step to the next.

    Attributes
    ----------
    previous_mean : numpy.ndarray
        Cell-average angular flux, shape (M, I).
    previous_slope : numpy.ndarray or None
        Angular slope, shape (M, I). Kept by the reference method, and by every method for the initial
        condition.
    low_order : LowOrderState
        Converged low-order moments.
    closure : ClosureFactors
        Closure of the last transport iterate, reused by the first low-order solve of the next step.
    corrections : ConsistencyCorrections
        Corrections of the last transport iterate.
    incoming : numpy.ndarray
        Incoming boundary flux of the step, shape (M,).
    """
    previous_mean: np.ndarray
    previous_slope: Optional[np.ndarray]
    low_order: LowOrderState
    closure: ClosureFactors
    corrections: ConsistencyCorrections
    incoming: np.ndarray

    def _arrays(self):
        yield self.previous_mean
        if self.previous_slope is not None:
            yield self.previous_slope
        yield from (self.low_order.scalar_mean, self.low_order.scalar_slope, self.low_order.current_mean,
                    self.low_order.current_slope)
        yield from (self.closure.mean, self.closure.slope, self.closure.edges)
        yield from (self.corrections.edge_current, self.corrections.edge_flux, self.corrections.edge_pressure,
                    self.corrections.cell_pressure)
        yield self.incoming

    @property
    def angular_values(self) -> int:
        """Number of stored angular-flux values."""
        count = self.previous_mean.size
        if self.previous_slope is not None:
            count += self.previous_slope.size
        return count

    def nbytes(self) -> int:
        """Size of the persisted payload in bytes."""
        return sum(array.nbytes for array in self._arrays())


class Approximation(ABC):
    """
    Produces the previous-step slope used by the slope equation of the transport sweep.

    ``start_step`` is called once per time step with the persisted data; ``effective_previous_fsm`` is called
    before every transport sweep with the latest low-order iterate of the current step. When the persisted
    state still holds the exact slope (reference method, or the initial condition on the first step), that
    slope is used as is.
    """
    kind: MethodKind

    def __init__(self):
        self.persisted = None
        self.quadrature = None

    def start_step(self, persisted: PersistedState, quadrature: AngularQuadrature) -> None:
        self.persisted = persisted
        self.quadrature = quadrature

    def effective_previous_fsm(self, current: Optional[LowOrderState]) -> EffectivePreviousFSM:
        if self.persisted.previous_slope is not None:
            return EffectivePreviousFSM.from_slope(self.persisted.previous_slope)
        return self.approximate(current)

    @abstractmethod
    def approximate(self, current: Optional[LowOrderState]) -> EffectivePreviousFSM:
        pass


class Reference(Approximation):
    """The unmodified scheme: the exact previous slope is persisted."""
    kind = MethodKind.REFERENCE

    def approximate(self, current):
        raise ConfigurationError("The reference method needs the persisted angular slope.")
