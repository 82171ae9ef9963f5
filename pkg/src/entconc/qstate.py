"""Dense polarization Hilbert-space engine.

Every photon mode is a two-level system with H=0 and V=1.  A state over n
modes is a vector of length 2**n whose most significant bit belongs to the
first mode in canonical (sorted-label) order.  States need not be normalized:
post-selection leaves the branch weight in the squared norm, so success
probabilities multiply through a chain of elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

NORM_TOL = 1e-12
OP_TOL = 1e-10
ZERO_BRANCH = 1e-14

ModeId = str


class ModeError(ValueError):
    """Unknown, duplicate or mismatched mode labels."""


class ImpossibleBranch(ValueError):
    """Post-selection on an outcome of (numerically) zero probability."""

    def __init__(self, message: str = "impossible branch", prob: float = 0.0):
        super().__init__(message)
        self.prob = prob


def _canonical(modes: Iterable[ModeId]) -> tuple[ModeId, ...]:
    modes = tuple(str(m) for m in modes)
    if len(set(modes)) != len(modes):
        seen = set()
        for m in modes:
            if m in seen:
                raise ModeError(f"duplicate mode label {m!r}")
            seen.add(m)
    return tuple(sorted(modes))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """Amplitude vector over labeled polarization modes.

    ``modes`` may be given in any order; amplitudes are permuted so that the
    stored order is canonical.
    """

    modes: tuple[ModeId, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        modes = tuple(str(m) for m in self.modes)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2 ** len(modes):
            raise ValueError(
                f"{amps.size} amplitudes for {len(modes)} modes; need {2 ** len(modes)}"
            )
        canon = _canonical(modes)
        if canon != modes and modes:
            t = amps.reshape((2,) * len(modes))
            t = np.transpose(t, [modes.index(m) for m in canon])
            amps = t.reshape(-1)
        object.__setattr__(self, "modes", canon)
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def from_terms(cls, modes: Sequence[ModeId], terms: Mapping[str, complex]) -> "PureState":
        """Build a state from ``{"HV": amp, ...}``; letters follow ``modes`` as given."""
        n = len(modes)
        amps = np.zeros(2**n, dtype=complex)
        for bits, amp in terms.items():
            if len(bits) != n or set(bits) - {"H", "V"}:
                raise ValueError(f"bad basis label {bits!r} for {n} modes")
            idx = int("".join("0" if b == "H" else "1" for b in bits), 2)
            amps[idx] += amp
        return cls(tuple(modes), amps)

    @property
    def n(self) -> int:
        return len(self.modes)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n)

    def amplitude(self, bits: str) -> complex:
        """Amplitude of a basis string such as ``"HVVH"`` in canonical mode order."""
        return complex(self.amplitudes[int(bits.replace("H", "0").replace("V", "1"), 2)])

    def __repr__(self) -> str:
        terms = []
        for i, a in enumerate(self.amplitudes):
            if abs(a) > 1e-12:
                bits = format(i, f"0{self.n}b").replace("0", "H").replace("1", "V")
                terms.append(f"({a:.4g})|{bits}>")
        return f"PureState(modes={self.modes}, {' + '.join(terms) or '0'})"


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Operator on the same labeled-mode basis as :class:`PureState`."""

    modes: tuple[ModeId, ...]
    matrix: np.ndarray

    def __post_init__(self):
        modes = tuple(str(m) for m in self.modes)
        n = len(modes)
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (2**n, 2**n):
            raise ValueError(f"matrix shape {mat.shape} does not match {n} modes")
        canon = _canonical(modes)
        if canon != modes and modes:
            perm = [modes.index(m) for m in canon]
            t = mat.reshape((2,) * (2 * n))
            t = np.transpose(t, perm + [p + n for p in perm])
            mat = t.reshape(2**n, 2**n)
        object.__setattr__(self, "modes", canon)
        object.__setattr__(self, "matrix", _frozen(mat))

    @property
    def n(self) -> int:
        return len(self.modes)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def tensor_view(self) -> np.ndarray:
        return self.matrix.reshape((2,) * (2 * self.n))

    def is_physical(self, tol: float = OP_TOL) -> bool:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=tol):
            return False
        return bool(np.linalg.eigvalsh((m + m.conj().T) / 2).min() >= -tol)


State = PureState | DensityOperator


def _axis(modes: Sequence[ModeId], m: ModeId) -> int:
    try:
        return modes.index(m)
    except ValueError:
        raise ModeError(f"unknown mode {m!r}; state has {tuple(modes)}") from None


def tensor(a: State, b: State) -> State:
    """Tensor product over disjoint mode sets; result is canonically ordered."""
    dup = set(a.modes) & set(b.modes)
    if dup:
        raise ModeError(f"duplicate mode label {sorted(dup)[0]!r}")
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(a.modes + b.modes, np.kron(a.amplitudes, b.amplitudes))
    a, b = to_density(a, check=False), to_density(b, check=False)
    na, nb = a.n, b.n
    t = np.multiply.outer(a.tensor_view(), b.tensor_view())
    # axes: a_ket, a_bra, b_ket, b_bra -> ket(a,b), bra(a,b)
    order = (
        list(range(na))
        + list(range(2 * na, 2 * na + nb))
        + list(range(na, 2 * na))
        + list(range(2 * na + nb, 2 * na + 2 * nb))
    )
    dim = 2 ** (na + nb)
    return DensityOperator(a.modes + b.modes, np.transpose(t, order).reshape(dim, dim))


def normalize(s: State) -> tuple[State, float]:
    """Return ``(unit state, weight)``; weight is the squared norm (or trace)."""
    if isinstance(s, PureState):
        w = s.norm_sq
        if w < ZERO_BRANCH:
            raise ImpossibleBranch("cannot normalize a zero state", w)
        return PureState(s.modes, s.amplitudes / np.sqrt(w)), w
    w = s.trace
    if w < ZERO_BRANCH:
        raise ImpossibleBranch("cannot normalize a zero operator", w)
    return DensityOperator(s.modes, s.matrix / w), w


def apply_single_mode(s: State, mode: ModeId, jones: np.ndarray) -> State:
    """Apply a 2x2 Jones matrix to one mode (``rho -> J rho J^dagger`` for operators)."""
    jones = np.asarray(jones, dtype=complex)
    k = _axis(s.modes, mode)
    if isinstance(s, PureState):
        t = np.moveaxis(np.tensordot(jones, s.tensor_view(), axes=([1], [k])), 0, k)
        return PureState(s.modes, t.reshape(-1))
    n = s.n
    t = np.moveaxis(np.tensordot(jones, s.tensor_view(), axes=([1], [k])), 0, k)
    t = np.moveaxis(np.tensordot(jones.conj(), t, axes=([1], [n + k])), 0, n + k)
    return DensityOperator(s.modes, t.reshape(2**n, 2**n))


def relabel(s: State, mapping: Mapping[ModeId, ModeId]) -> State:
    for old in mapping:
        _axis(s.modes, old)
    new = tuple(mapping.get(m, m) for m in s.modes)
    if isinstance(s, PureState):
        return PureState(new, s.amplitudes)
    return DensityOperator(new, s.matrix)


def product_ket(targets: Sequence[tuple[ModeId, np.ndarray]]) -> PureState:
    modes = [m for m, _ in targets]
    amps = np.ones(1, dtype=complex)
    for _, ket in targets:
        amps = np.kron(amps, np.asarray(ket, dtype=complex).reshape(2))
    return PureState(tuple(modes), amps)


def project_unnormalized(s: State, target: PureState) -> State:
    """Contract ``target`` against its modes of ``s``; the residual keeps the branch weight."""
    axes = [_axis(s.modes, m) for m in target.modes]
    rest = tuple(m for m in s.modes if m not in target.modes)
    tv = target.tensor_view().conj()
    if isinstance(s, PureState):
        t = np.tensordot(tv, s.tensor_view(), axes=(list(range(target.n)), axes))
        return PureState(rest, t.reshape(-1))
    n = s.n
    t = np.tensordot(tv, s.tensor_view(), axes=(list(range(target.n)), axes))
    # remaining axes: ket(rest), bra(all n)
    r = len(rest)
    bra_axes = [r + a for a in axes]
    t = np.tensordot(target.tensor_view(), t, axes=(list(range(target.n)), bra_axes))
    return DensityOperator(rest, t.reshape(2**r, 2**r))


def project_onto(s: State, target: PureState) -> tuple[State, float]:
    """Project the target's modes onto ``target``; return normalized residual and probability.

    The probability is relative to the input weight, i.e. ``|<t|s>|^2`` for an
    unnormalized ``s`` equals the input squared norm times the conditional
    probability.
    """
    if abs(target.norm_sq - 1.0) > NORM_TOL * 100:
        raise ValueError("projection target must be unit norm")
    residual = project_unnormalized(s, target)
    if residual.n == 0:
        w = residual.norm_sq if isinstance(residual, PureState) else residual.trace
        if w < ZERO_BRANCH:
            raise ImpossibleBranch("projection has zero probability", w)
        return residual, w
    return normalize(residual)


def project(s: State, targets: Sequence[tuple[ModeId, np.ndarray]]) -> tuple[State, float]:
    """Project each listed mode onto a single-mode ket."""
    return project_onto(s, product_ket(targets))


def to_density(s: State, check: bool = True) -> DensityOperator:
    if isinstance(s, DensityOperator):
        return s
    if check and abs(s.norm_sq - 1.0) > NORM_TOL:
        raise ValueError(f"to_density needs a unit-norm state (norm_sq={s.norm_sq!r})")
    a = s.amplitudes
    return DensityOperator(s.modes, np.outer(a, a.conj()))


def partial_trace(rho: DensityOperator, keep: Iterable[ModeId]) -> DensityOperator:
    keep = set(keep)
    for m in keep:
        _axis(rho.modes, m)
    n = rho.n
    letters = "abcdefghijklmnopqrstuvwxyz"
    ket = list(letters[:n])
    bra = list(letters[n : 2 * n])
    for i, m in enumerate(rho.modes):
        if m not in keep:
            bra[i] = ket[i]
    kept = [i for i, m in enumerate(rho.modes) if m in keep]
    out = "".join(ket[i] for i in kept) + "".join(bra[i] for i in kept)
    t = np.einsum("".join(ket) + "".join(bra) + "->" + out, rho.tensor_view())
    k = len(kept)
    return DensityOperator(tuple(rho.modes[i] for i in kept), t.reshape(2**k, 2**k))


def fidelity_to_pure(rho: State, t: PureState) -> float:
    """``<t|rho|t>`` for a density operator (or ``|<t|s>|^2`` for a unit pure state)."""
    if set(rho.modes) != set(t.modes):
        raise ModeError(f"mode mismatch: {rho.modes} vs {t.modes}")
    if isinstance(rho, PureState):
        return float(abs(np.vdot(t.amplitudes, rho.amplitudes)) ** 2)
    a = t.amplitudes
    return float(np.vdot(a, rho.matrix @ a).real)


def keep_equal(s: State, mode_a: ModeId, mode_b: ModeId) -> State:
    """Zero every basis component where the two modes differ in polarization."""
    ia, ib = _axis(s.modes, mode_a), _axis(s.modes, mode_b)
    if isinstance(s, PureState):
        t = s.tensor_view().copy()
        idx = [slice(None)] * s.n
        for x, y in ((0, 1), (1, 0)):
            idx[ia], idx[ib] = x, y
            t[tuple(idx)] = 0
        return PureState(s.modes, t.reshape(-1))
    n = s.n
    mask = np.zeros((2,) * n, dtype=bool)
    idx = [slice(None)] * n
    for x in (0, 1):
        idx[ia], idx[ib] = x, x
        mask[tuple(idx)] = True
    m = mask.reshape(-1)
    return DensityOperator(s.modes, s.matrix * np.outer(m, m))


def coherent_mixture(a: PureState, b: PureState, gamma: float) -> DensityOperator:
    """``|a><a| + |b><b| + gamma (|a><b| + |b><a|)``, normalized to unit trace."""
    if a.modes != b.modes:
        raise ModeError(f"mode mismatch: {a.modes} vs {b.modes}")
    va, vb = a.amplitudes, b.amplitudes
    m = np.outer(va, va.conj()) + np.outer(vb, vb.conj())
    m = m + gamma * (np.outer(va, vb.conj()) + np.outer(vb, va.conj()))
    rho, _ = normalize(DensityOperator(a.modes, m))
    return rho


def psi_plus(first: ModeId, second: ModeId) -> PureState:
    r = 1 / np.sqrt(2)
    return PureState.from_terms((first, second), {"HV": r, "VH": r})


def psi_minus(first: ModeId, second: ModeId) -> PureState:
    r = 1 / np.sqrt(2)
    return PureState.from_terms((first, second), {"HV": r, "VH": -r})
