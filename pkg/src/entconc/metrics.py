"""Correlations, CHSH, visibilities, H/V fractions and fidelity estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .optics import polarizer
from .qstate import OP_TOL, DensityOperator, State, to_density

TSIRELSON = 2 * math.sqrt(2)
OUTCOMES = ("++", "+-", "-+", "--")
_SIGNS = np.array([1, -1, -1, 1])


@dataclass(frozen=True)
class ChshSettings:
    a: float
    a_prime: float
    b: float
    b_prime: float

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            v = getattr(self, name)
            if not 0.0 <= v < math.pi:
                raise ValueError(f"CHSH angle {name}={v!r} outside [0, pi)")

    def pairs(self) -> dict[str, tuple[float, float]]:
        """Setting id -> (theta1, theta2), in the order the S sum uses them."""
        return {
            "a_b": (self.a, self.b),
            "a_bp": (self.a, self.b_prime),
            "ap_b": (self.a_prime, self.b),
            "ap_bp": (self.a_prime, self.b_prime),
        }


# sign of each setting's correlation in S
CHSH_SIGNS = {"a_b": 1, "a_bp": -1, "ap_b": 1, "ap_bp": 1}


@dataclass(frozen=True)
class CorrelationRecord:
    theta1: float
    theta2: float
    probs: tuple[float, float, float, float]  # ++, +-, -+, --

    @property
    def E(self) -> float:
        return float(np.dot(_SIGNS, self.probs))


def _two_mode(rho: State) -> DensityOperator:
    rho = to_density(rho)
    if rho.n != 2:
        raise ValueError(f"expected a two-mode state, got modes {rho.modes}")
    return rho


def outcome_probs(rho: State, theta1: float, theta2: float) -> np.ndarray:
    """Joint probabilities of (++, +-, -+, --) for polarizers at theta1, theta2.

    "+" is transmission through the polarizer at theta, "-" through theta + pi/2.
    """
    m = _two_mode(rho).matrix
    out = np.empty(4)
    for k, (d1, d2) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        v = np.kron(polarizer(theta1 + d1 * math.pi / 2), polarizer(theta2 + d2 * math.pi / 2))
        out[k] = np.vdot(v, m @ v).real
    return out


def correlation(rho: State, theta1: float, theta2: float) -> CorrelationRecord:
    p = outcome_probs(rho, theta1, theta2)
    return CorrelationRecord(theta1, theta2, tuple(float(x) for x in p))


def chsh_S(rho: State, s: ChshSettings) -> float:
    """S = E(a,b) - E(a,b') + E(a',b) + E(a',b')."""
    rho = _two_mode(rho)
    return sum(CHSH_SIGNS[k] * correlation(rho, *ang).E for k, ang in s.pairs().items())


def optimal_settings_psi_plus() -> ChshSettings:
    return ChshSettings(a=0.0, a_prime=math.pi / 4, b=3 * math.pi / 8, b_prime=math.pi / 8)


def hv_fractions(rho: State) -> tuple[float, float, float, float, float]:
    """(p_HH, p_HV, p_VH, p_VV, p_HV / p_VH); the ratio is ``inf`` when p_VH vanishes."""
    d = np.diag(_two_mode(rho).matrix).real
    hh, hv, vh, vv = (float(x) for x in d)
    ratio = math.inf if vh <= OP_TOL else hv / vh
    return hh, hv, vh, vv, ratio


def pm_visibility(rho: State) -> float:
    """Correlation contrast in the +/- basis."""
    p = outcome_probs(rho, math.pi / 4, math.pi / 4)
    return float(np.dot(_SIGNS, p) / p.sum())


def fidelity_from_S(S: float) -> float:
    """F = (1 + V) / 2 with V = S / (2 sqrt 2)."""
    if not -1e-12 <= S <= TSIRELSON + 1e-9:
        raise ValueError(f"S={S!r} outside [0, 2 sqrt 2]")
    return (1 + S / TSIRELSON) / 2


def violation_sigma(S: float, sigma: float) -> float:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    return (S - 2) / sigma
