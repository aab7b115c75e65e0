from .approximation import Approximation, MethodKind
from ..transport import EffectivePreviousFSM

import numpy as np


def zero_slope(direction_count: int, cell_count: int) -> np.ndarray:
    """The slope field of the zero-slope approximation."""
    return np.zeros((direction_count, cell_count))


def p1_fsm(scalar_slope: np.ndarray, current_slope: np.ndarray, quadrature) -> np.ndarray:
    """
    Slope from a P1 expansion in angle of the low-order first moments.

    Parameters
    ----------
    scalar_slope, current_slope : numpy.ndarray
        First spatial moments of the scalar flux and current of the previous step, shape (I,).
    quadrature : AngularQuadrature

    Returns
    -------
    numpy.ndarray
        (phi_hat + 3 mu_m J_hat) / 2, shape (M, I).
    """
    mu = quadrature.directions[:, None]
    return 0.5 * (scalar_slope[None, :] + 3.0 * mu * current_slope[None, :])


class ZeroSlope(Approximation):
    kind = MethodKind.ZERO_SLOPE

    def approximate(self, current):
        shape = self.persisted.previous_mean.shape
        return EffectivePreviousFSM.from_slope(zero_slope(*shape))


class P1Expansion(Approximation):
    """Uses the converged low-order moments of the previous step; evaluated once per step."""
    kind = MethodKind.P1

    def start_step(self, persisted, quadrature):
        super().start_step(persisted, quadrature)
        self._slope = EffectivePreviousFSM.from_slope(
            p1_fsm(persisted.low_order.scalar_slope, persisted.low_order.current_slope, quadrature))

    def approximate(self, current):
        return self._slope
