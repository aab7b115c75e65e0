"""
Previous-step slope modelled as beta * (current-step slope), with beta the ratio of previous to current
low-order scalar-flux data. The slope then enters the sweep in coefficient form and the two-level iteration
becomes nonlinear.
"""
import logging

import numpy as np

from .approximation import Approximation, MethodKind
from ..transport import EffectivePreviousFSM

logger = logging.getLogger(__name__)

BETA_MAX = 2.0
RATIO_THRESHOLD = 1e-12
TINY = np.finfo(float).tiny


def guarded_ratio(previous, current) -> np.ndarray:
    """
    previous / current clipped to [0, BETA_MAX].

    A denominator that is negligible against the numerator (|current| <= 1e-12 max(|previous|, tiny))
    gives BETA_MAX, and 0 / 0 gives 1.
    """
    previous = np.asarray(previous, dtype=float)
    current = np.asarray(current, dtype=float)
    degenerate = np.abs(current) <= RATIO_THRESHOLD * np.maximum(np.abs(previous), TINY)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(degenerate, BETA_MAX, previous / current)
    ratio = np.where(degenerate & (previous == 0.0), 1.0, ratio)
    clipped = np.clip(ratio, 0.0, BETA_MAX)
    if np.any(clipped != ratio):
        logger.debug(f"Clamped {np.count_nonzero(clipped != ratio)} beta ratios to [0, {BETA_MAX}]")
    return clipped


def beta_bar_coefficients(previous_scalar_mean: np.ndarray, current_scalar_mean: np.ndarray) -> EffectivePreviousFSM:
    """
    Coefficient form of slope* = beta_i slope^n with beta_i = phi_bar_i^{n-1} / phi_bar_i^n.

    Returns
    -------
    EffectivePreviousFSM
        Coefficients (0, beta_i) per cell.
    """
    beta = guarded_ratio(previous_scalar_mean, current_scalar_mean)
    return EffectivePreviousFSM.from_coefficients(np.zeros_like(beta), beta)


def beta_lr_coefficients(previous_left: np.ndarray, previous_right: np.ndarray, current_left: np.ndarray,
                         current_right: np.ndarray) -> EffectivePreviousFSM:
    """
    Coefficient form of slope* = (beta_R psi_R^n - beta_L psi_L^n) / 2 with corner-value ratios
    beta_R = phi_R^{n-1} / phi_R^n and beta_L = phi_L^{n-1} / phi_L^n.

    Since psi_R = mean + slope and psi_L = mean - slope, this is
    ((beta_R - beta_L) mean + (beta_R + beta_L) slope) / 2.

    Returns
    -------
    EffectivePreviousFSM
        Coefficients ((beta_R - beta_L) / 2, (beta_R + beta_L) / 2) per cell.
    """
    beta_left = guarded_ratio(previous_left, current_left)
    beta_right = guarded_ratio(previous_right, current_right)
    return EffectivePreviousFSM.from_coefficients(0.5 * (beta_right - beta_left), 0.5 * (beta_right + beta_left))


class BetaBar(Approximation):
    kind = MethodKind.BETA_BAR

    def approximate(self, current):
        if current is None:
            ones = np.ones(self.persisted.previous_mean.shape[1])
            return EffectivePreviousFSM.from_coefficients(np.zeros_like(ones), ones)
        return beta_bar_coefficients(self.persisted.low_order.scalar_mean, current.scalar_mean)


class BetaLR(Approximation):
    kind = MethodKind.BETA_LR

    def approximate(self, current):
        if current is None:
            ones = np.ones(self.persisted.previous_mean.shape[1])
            return EffectivePreviousFSM.from_coefficients(np.zeros_like(ones), ones)
        previous = self.persisted.low_order
        return beta_lr_coefficients(previous.scalar_left, previous.scalar_right, current.scalar_left,
                                    current.scalar_right)
