"""Entanglement concentration and a one-step quantum repeater with polarization photons."""

from .qstate import (
    DensityOperator,
    ImpossibleBranch,
    ModeError,
    PureState,
    fidelity_to_pure,
    normalize,
    partial_trace,
    project,
    psi_minus,
    psi_plus,
    tensor,
    to_density,
)
from .protocols import (
    PairSpec,
    ProtocolResult,
    bell_swap,
    concentrate,
    degrade_pair,
    local_filter,
    prepare_pair,
    repeater_swap,
)

__version__ = "0.1.0"
