"""
Slope reconstruction from neighbouring cell averages, limited with minmod.
"""
from .approximation import Approximation, MethodKind
from ..errors import ConfigurationError
from ..transport import EffectivePreviousFSM

import numpy as np


def minmod(f1, f2, f3):
    """
    sign(f1) * min(|f1|, |f2|, |f3|) when the three arguments share a sign, 0 otherwise.

    Works elementwise on arrays; scalars in give a float out.
    """
    f1, f2, f3 = np.asarray(f1, dtype=float), np.asarray(f2, dtype=float), np.asarray(f3, dtype=float)
    sign = np.sign(f1)
    agree = (sign == np.sign(f2)) & (sign == np.sign(f3))
    smallest = np.minimum(np.minimum(np.abs(f1), np.abs(f2)), np.abs(f3))
    result = np.where(agree, sign * smallest, 0.0)
    return float(result) if result.ndim == 0 else result


def sr_raw_slope(previous_mean: np.ndarray, previous_incoming: np.ndarray, quadrature) -> np.ndarray:
    """
    Unlimited slope reconstructed from cell averages.

    Interior cells use a quarter of the central difference. The boundary cells take the corner value at the
    boundary face from the incoming flux for directions entering there, and the cell average itself for the
    directions leaving.

    Parameters
    ----------
    previous_mean : numpy.ndarray
        Cell-average angular flux of the previous step, shape (M, I).
    previous_incoming : numpy.ndarray
        Incoming boundary flux of the previous step, shape (M,).
    quadrature : AngularQuadrature

    Returns
    -------
    numpy.ndarray
        Raw slope, shape (M, I).
    """
    cell_count = previous_mean.shape[1]
    if cell_count < 2:
        raise ConfigurationError("Slope reconstruction needs at least two cells.")
    forward = quadrature.directions > 0
    slope = np.empty_like(previous_mean)
    slope[:, 1:-1] = 0.25 * (previous_mean[:, 2:] - previous_mean[:, :-2])
    slope[:, 0] = np.where(forward,
                           0.25 * (previous_mean[:, 1] - previous_incoming),
                           0.25 * (previous_mean[:, 1] - previous_mean[:, 0]))
    slope[:, -1] = np.where(forward,
                            0.25 * (previous_mean[:, -1] - previous_mean[:, -2]),
                            0.25 * (previous_incoming - previous_mean[:, -2]))
    return slope


def sr_sl_fsm(previous_mean: np.ndarray, previous_incoming: np.ndarray, quadrature) -> np.ndarray:
    """
    Limited reconstruction: minmod of the raw slope and the two one-sided half differences in interior
    cells; boundary cells keep their raw slope.
    """
    slope = sr_raw_slope(previous_mean, previous_incoming, quadrature)
    slope[:, 1:-1] = minmod(slope[:, 1:-1],
                            0.5 * (previous_mean[:, 1:-1] - previous_mean[:, :-2]),
                            0.5 * (previous_mean[:, 2:] - previous_mean[:, 1:-1]))
    return slope


class SlopeReconstruction(Approximation):
    """SR-SL: inputs are previous-step data only, so the slope is built once per step."""
    kind = MethodKind.SR_SL

    def start_step(self, persisted, quadrature):
        super().start_step(persisted, quadrature)
        self._slope = None
        if persisted.previous_slope is None:
            self._slope = EffectivePreviousFSM.from_slope(
                sr_sl_fsm(persisted.previous_mean, persisted.incoming, quadrature))

    def approximate(self, current):
        return self._slope
