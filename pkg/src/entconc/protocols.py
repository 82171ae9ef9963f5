"""Concentration, one-step repeater, plain Bell swap and local filtering.

Every protocol runs on either representation: hand it ``PureState`` pairs for
the fast path, or pass ``backend="density"`` to push the same element chain
through density operators.  The two must agree; the test suite checks it.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import optics
from .qstate import (
    NORM_TOL,
    DensityOperator,
    ImpossibleBranch,
    ModeId,
    PureState,
    State,
    apply_single_mode,
    fidelity_to_pure,
    normalize,
    project,
    project_onto,
    psi_plus,
    tensor,
    to_density,
)

Backend = Literal["pure", "density"]

BRANCHES = ("pp", "pm", "mp", "mm")
_KETS = {"p": optics.PLUS, "m": optics.MINUS}


@dataclass(frozen=True)
class PairSpec:
    """``alpha |H V> + beta |V H>`` on (mode_first, mode_second)."""

    alpha: complex
    beta: complex
    mode_first: ModeId = "1"
    mode_second: ModeId = "2"

    def __post_init__(self):
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n - 1.0) > NORM_TOL:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {n!r}, expected 1")

    @property
    def ratio(self) -> float:
        """Intensity ratio |HV| : |VH|."""
        b = abs(self.beta) ** 2
        return float("inf") if b == 0 else abs(self.alpha) ** 2 / b


def pair_from_windows(
    n: int,
    t_h: float = optics.T_H,
    t_v: float = optics.T_V,
    phase: float = 0.0,
    modes: tuple[ModeId, ModeId] = ("1", "2"),
) -> PairSpec:
    """Coefficients of Psi+ after ``n`` windows on the first photon and a phase on |VH>."""
    if n == 0:
        a, b = 1.0, 1.0
    else:
        w = optics.brewster_window(t_h, t_v, n)
        a, b = np.sqrt(w.t_h), np.sqrt(w.t_v)
    norm = np.hypot(a, b)
    return PairSpec(a / norm, b / norm * cmath.exp(1j * phase), *modes)


def prepare_pair(spec: PairSpec) -> PureState:
    return PureState.from_terms(
        (spec.mode_first, spec.mode_second), {"HV": spec.alpha, "VH": spec.beta}
    )


def degrade_pair(s: State, mode: ModeId, windows: optics.FilterElement) -> tuple[State, float]:
    """Send one photon through a filter; returns the renormalized pair and its transmission."""
    return normalize(windows.apply(s, mode))


@dataclass
class ProtocolResult:
    output: State
    success_prob: float
    selected_outcome: str
    pbs_prob: float = 1.0
    branch_probs: dict[str, float] = field(default_factory=dict)
    intermediate: State | None = None
    needs_phase_flip: bool = False

    @property
    def density(self) -> DensityOperator:
        return to_density(self.output)

    @property
    def fidelity(self) -> float:
        """Fidelity of the output pair to Psi+ (modes in canonical order)."""
        return fidelity_to_pure(self.output, psi_plus(*self.output.modes))


def _lift(s: State, backend: Backend) -> State:
    if backend == "density":
        return to_density(s, check=False)
    if backend != "pure":
        raise ValueError(f"unknown backend {backend!r}")
    return s


def _check_pairs(pair12: State, pair34: State) -> None:
    if set(pair12.modes) != {"1", "2"} or set(pair34.modes) != {"3", "4"}:
        raise ValueError(
            f"expected pairs on modes (1,2) and (3,4), got {pair12.modes} and {pair34.modes}"
        )


def interfere(pair12: State, pair34: State, backend: Backend = "pure") -> tuple[State, float]:
    """R90 on photon 4, then PBS coincidence of 2 and 4 into 2p and 4p.

    Returns the conditional four-photon (GHZ-type) state and the PBS success
    probability.
    """
    _check_pairs(pair12, pair34)
    s = tensor(_lift(pair12, backend), _lift(pair34, backend))
    s = apply_single_mode(s, "4", optics.R90)
    return optics.pbs_coincidence(s, "2", "4", "2p", "4p")


def interfere_branches(pair12: PureState, pair34: PureState) -> tuple[PureState, PureState]:
    """The two unnormalized components a PBS coincidence keeps (both-H and both-V)."""
    _check_pairs(pair12, pair34)
    s = apply_single_mode(tensor(pair12, pair34), "4", optics.R90)
    return optics.pbs_branches(s, "2", "4", "2p", "4p")


def project_branches(
    ghz: State, modes: tuple[ModeId, ModeId], branch: str, pbs_prob: float
) -> ProtocolResult:
    """Measure ``modes`` in the +/- basis; every branch is evaluated, ``branch`` is kept."""
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
    probs: dict[str, float] = {}
    outputs: dict[str, State] = {}
    for b in BRANCHES:
        targets = [(modes[0], _KETS[b[0]]), (modes[1], _KETS[b[1]])]
        try:
            out, p = project(ghz, targets)
        except ImpossibleBranch:
            out, p = None, 0.0
        probs[b] = p
        outputs[b] = out
    if outputs[branch] is None:
        raise ImpossibleBranch(f"branch {branch} has zero probability")
    return ProtocolResult(
        output=outputs[branch],
        success_prob=pbs_prob * probs[branch],
        selected_outcome=branch,
        pbs_prob=pbs_prob,
        branch_probs=probs,
        intermediate=ghz,
        needs_phase_flip=branch in ("pm", "mp"),
    )


def concentrate(
    pair12: State, pair34: State, branch: str = "pp", backend: Backend = "pure"
) -> ProtocolResult:
    """Entanglement concentration: photons 1 and 2p are left entangled.

    ``branch`` names the +/- outcome on modes 3 and 4p.
    """
    ghz, p_pbs = interfere(pair12, pair34, backend)
    return project_branches(ghz, ("3", "4p"), branch, p_pbs)


def repeater_swap(
    pair12: State, pair34: State, branch: str = "pp", backend: Backend = "pure"
) -> ProtocolResult:
    """One-step repeater: same chain, +/- measurement on 2p and 4p entangles 1 and 3."""
    ghz, p_pbs = interfere(pair12, pair34, backend)
    return project_branches(ghz, ("2p", "4p"), branch, p_pbs)


def bell_swap(pair12: State, pair34: State, backend: Backend = "pure") -> ProtocolResult:
    """Plain entanglement swapping: project photons 2 and 3 onto Psi+."""
    _check_pairs(pair12, pair34)
    s = tensor(_lift(pair12, backend), _lift(pair34, backend))
    out, p = project_onto(s, psi_plus("2", "3"))
    return ProtocolResult(output=out, success_prob=p, selected_outcome="psi+", intermediate=None)


def local_filter(spec: PairSpec) -> tuple[optics.FilterElement, float]:
    """Filter for the first photon that equalizes |alpha| and |beta|.

    The larger amplitude is attenuated to the smaller one; success is
    ``2 min(|alpha|^2, |beta|^2)``.
    """
    a2, b2 = abs(spec.alpha) ** 2, abs(spec.beta) ** 2
    if min(a2, b2) < NORM_TOL:
        raise ValueError("cannot filter a product state (alpha * beta = 0)")
    if a2 >= b2:
        f = optics.FilterElement(b2 / a2, 1.0)
    else:
        f = optics.FilterElement(1.0, a2 / b2)
    return f, 2 * min(a2, b2)


def filter_pair(spec: PairSpec, backend: Backend = "pure") -> tuple[State, float]:
    """Prepare a known pair, filter it and undo its relative phase: Psi+ with some probability."""
    f, _ = local_filter(spec)
    s = _lift(prepare_pair(spec), backend)
    s = f.apply(s, spec.mode_first)
    phi = cmath.phase(spec.beta) - cmath.phase(spec.alpha)
    if phi:
        s = apply_single_mode(s, spec.mode_first, optics.phase_compensator(-phi))
    return normalize(s)


def repeater_filtered(
    spec12: PairSpec, spec34: PairSpec, branch: str = "pp", backend: Backend = "pure"
) -> ProtocolResult:
    """Unequal known pairs: local filtering on each, then the one-step repeater."""
    s12, p12 = filter_pair(spec12, backend)
    s34, p34 = filter_pair(spec34, backend)
    res = repeater_swap(s12, s34, branch, backend)
    res.success_prob *= p12 * p34
    return res
