"""Jones matrices for the bench elements and the PBS coincidence filter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import (
    NORM_TOL,
    ImpossibleBranch,
    ModeId,
    PureState,
    State,
    apply_single_mode,
    keep_equal,
    normalize,
    relabel,
)

# Transmissions of one Brewster window, horizontal and vertical.
T_H = 0.98
T_V = 0.73
# Tilt of the windows' vertical axis; recorded only, the model uses T_H/T_V.
BREWSTER_TILT_DEG = 56.0

R90 = np.array([[0, 1], [1, 0]], dtype=complex)


def is_unitary(j: np.ndarray, tol: float = NORM_TOL) -> bool:
    j = np.asarray(j, dtype=complex)
    return bool(np.allclose(j.conj().T @ j, np.eye(2), atol=tol))


def is_passive(j: np.ndarray, tol: float = NORM_TOL) -> bool:
    """True when no input polarization gains intensity (singular values <= 1)."""
    return bool(np.linalg.svd(np.asarray(j, dtype=complex), compute_uv=False).max() <= 1 + tol)


@dataclass(frozen=True)
class FilterElement:
    """Diagonal polarization-dependent attenuator with intensity transmissions t_h, t_v."""

    t_h: float
    t_v: float

    def __post_init__(self):
        for name in ("t_h", "t_v"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v!r} outside [0, 1]")

    @property
    def jones(self) -> np.ndarray:
        return np.diag([np.sqrt(self.t_h), np.sqrt(self.t_v)]).astype(complex)

    def apply(self, s: State, mode: ModeId) -> State:
        return apply_single_mode(s, mode, self.jones)


def half_wave_plate(theta: float) -> np.ndarray:
    """Half-wave plate with fast axis at ``theta``; ``theta = pi/4`` swaps H and V."""
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def brewster_window(t_h: float = T_H, t_v: float = T_V, n: int = 1) -> FilterElement:
    """Stack of ``n`` identical Brewster windows."""
    if not 0.0 < t_v <= t_h <= 1.0:
        raise ValueError(f"need 0 < t_v <= t_h <= 1, got t_h={t_h!r}, t_v={t_v!r}")
    if int(n) != n or n < 1:
        raise ValueError(f"window count must be a positive integer, got {n!r}")
    return FilterElement(t_h**n, t_v**n)


def polarizer(theta: float) -> np.ndarray:
    """Unit ket transmitted by a linear polarizer at ``theta`` from horizontal."""
    return np.array([np.cos(theta), np.sin(theta)], dtype=complex)


def phase_compensator(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * phi)]).astype(complex)


PLUS = polarizer(np.pi / 4)
MINUS = polarizer(3 * np.pi / 4)


def pbs_branches(
    s: State, in_a: ModeId, in_b: ModeId, out_a: ModeId, out_b: ModeId
) -> tuple[State, State]:
    """Unnormalized HH and VV components of ``s`` on the two PBS inputs, relabeled to the outputs."""
    for m in (out_a, out_b):
        if m in s.modes and m not in (in_a, in_b):
            raise ValueError(f"output label {m!r} already used")
    kept = keep_equal(s, in_a, in_b)
    hh = apply_single_mode(kept, in_a, np.diag([1, 0]))
    vv = apply_single_mode(kept, in_a, np.diag([0, 1]))
    mapping = {in_a: out_a, in_b: out_b}
    return relabel(hh, mapping), relabel(vv, mapping)


def pbs_coincidence(
    s: State, in_a: ModeId, in_b: ModeId, out_a: ModeId, out_b: ModeId
) -> tuple[State, float]:
    """Two-photon coincidence behind a PBS: keep only equal-polarization terms.

    Returns the renormalized conditional state and its probability (the
    squared norm of the kept branch).
    """
    for m in (out_a, out_b):
        if m in s.modes and m not in (in_a, in_b):
            raise ValueError(f"output label {m!r} already used")
    kept = relabel(keep_equal(s, in_a, in_b), {in_a: out_a, in_b: out_b})
    try:
        return normalize(kept)
    except ImpossibleBranch as e:
        raise ImpossibleBranch("no HH/VV component at the PBS inputs", e.prob) from None


def discarded_weight(s: State, in_a: ModeId, in_b: ModeId) -> float:
    """Weight of the HV/VH terms a PBS coincidence rejects."""
    kept = keep_equal(s, in_a, in_b)
    if isinstance(s, PureState):
        return s.norm_sq - kept.norm_sq
    return s.trace - kept.trace
