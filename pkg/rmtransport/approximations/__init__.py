"""
This subpackage provides the treatments of the previous-step slope of the angular flux: the exact one kept by
the reference method and the reduced-memory approximations that persist only cell averages.
"""
from .approximation import Approximation, MethodKind, PersistedState, Reference
from .beta import BetaBar, BetaLR
from .expansion import P1Expansion, ZeroSlope
from .reconstruction import SlopeReconstruction

_APPROXIMATIONS = {
    MethodKind.REFERENCE: Reference,
    MethodKind.ZERO_SLOPE: ZeroSlope,
    MethodKind.P1: P1Expansion,
    MethodKind.SR_SL: SlopeReconstruction,
    MethodKind.BETA_BAR: BetaBar,
    MethodKind.BETA_LR: BetaLR,
}


def create_approximation(kind: MethodKind) -> Approximation:
    """Returns a fresh approximation object for a method."""
    return _APPROXIMATIONS[kind]()
