"""Imperfect interference at the PBS and Poisson coincidence counting.

Partial distinguishability of photons 2 and 4 is a single overlap ``gamma``
that scales the coherence between the two components a PBS coincidence keeps.
Accidentals are a uniform fraction ``eps`` spread over the four outcomes of a
setting.  All randomness flows from one integer seed through
``numpy.random.SeedSequence`` spawn keys, so results do not depend on the
order in which settings or scan points are evaluated.
"""

from __future__ import annotations

import math
import warnings
import zlib
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from . import protocols
from .metrics import CHSH_SIGNS, ChshSettings, outcome_probs
from .qstate import DensityOperator, PureState, coherent_mixture

Accounting = Literal["per_outcome", "per_setting"]

# photon wavelength (twice the 394 nm pump) and interference-filter bandwidth
WAVELENGTH_NM = 788.0
FILTER_FWHM_NM = 3.6
FOURFOLD_RATE = 8.0
INTEGRATION_TIME = 1000.0
DEFAULT_EPS = 0.004


def coherence_length_um(wavelength_nm: float = WAVELENGTH_NM, fwhm_nm: float = FILTER_FWHM_NM) -> float:
    """Transform-limited coherence length 0.44 lambda^2 / delta-lambda, in micrometres."""
    return 0.44 * wavelength_nm**2 / fwhm_nm / 1000.0


@dataclass(frozen=True)
class NoiseParams:
    overlap_gamma: float = 1.0
    background_eps: float = DEFAULT_EPS
    coherence_length: float = field(default_factory=coherence_length_um)

    def __post_init__(self):
        if not 0.0 <= self.overlap_gamma <= 1.0:
            raise ValueError(f"overlap_gamma={self.overlap_gamma!r} outside [0, 1]")
        if not 0.0 <= self.background_eps <= 1.0:
            raise ValueError(f"background_eps={self.background_eps!r} outside [0, 1]")
        if not self.coherence_length > 0:
            raise ValueError(f"coherence_length={self.coherence_length!r} must be positive")


def overlap_from_delay(d: float, coherence_length: float, gamma0: float = 1.0) -> float:
    """Gaussian mode overlap gamma0 * exp(-(d / L_c)^2)."""
    if not coherence_length > 0:
        raise ValueError(f"coherence length must be positive, got {coherence_length!r}")
    return gamma0 * math.exp(-((d / coherence_length) ** 2))


def apply_distinguishability(branch_a: PureState, branch_b: PureState, gamma: float) -> DensityOperator:
    """Scale the coherence between the two PBS-kept components by ``gamma``.

    Populations are untouched; gamma=1 gives the pure post-selected state and
    gamma=0 the incoherent mixture of the two components.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma={gamma!r} outside [0, 1]")
    return coherent_mixture(branch_a, branch_b, gamma)


def noisy_swap(
    pair12: PureState,
    pair34: PureState,
    gamma: float,
    measured: tuple[str, str] = ("3", "4p"),
    branch: str = "pp",
) -> protocols.ProtocolResult:
    """Concentration (``measured=("3","4p")``) or repeater (``("2p","4p")``) with overlap gamma."""
    hh, vv = protocols.interfere_branches(pair12, pair34)
    p_pbs = hh.norm_sq + vv.norm_sq
    rho = apply_distinguishability(hh, vv, gamma)
    return protocols.project_branches(rho, measured, branch, p_pbs)


@dataclass
class CountTable:
    """Integer counts per setting; outcomes ordered (++, +-, -+, --)."""

    counts: dict[str, np.ndarray]
    expected: dict[str, np.ndarray]
    rate: float
    integration_time: float
    seed: int | None
    background_eps: float = 0.0
    accounting: Accounting = "per_outcome"
    angles: dict[str, tuple[float, float]] = field(default_factory=dict)


def _sub_rng(seed: int, key: str | int) -> np.random.Generator:
    k = key if isinstance(key, int) else zlib.crc32(key.encode())
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))


def expected_counts(
    outcome_probs: Mapping[str, Sequence[float]],
    rate: float,
    time: float,
    eps: float = 0.0,
    accounting: Accounting = "per_outcome",
) -> dict[str, np.ndarray]:
    if not (rate > 0 and time > 0):
        raise ValueError("rate and time must be positive")
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps={eps!r} outside [0, 1]")
    if accounting not in ("per_outcome", "per_setting"):
        raise ValueError(f"unknown accounting {accounting!r}")
    # per_setting: the stated time covers all four outcomes of a setting
    t = time if accounting == "per_outcome" else time / 4
    out = {}
    for sid, p in outcome_probs.items():
        p = np.asarray(p, dtype=float)
        if p.shape != (4,) or (p < -1e-12).any() or p.sum() > 1 + 1e-9:
            raise ValueError(f"invalid probability row for {sid!r}: {p}")
        out[sid] = rate * t * ((1 - eps) * np.clip(p, 0, None) + eps / 4)
    return out


def sample_counts(
    outcome_probs: Mapping[str, Sequence[float]],
    rate: float,
    time: float,
    eps: float = 0.0,
    seed: int = 0,
    accounting: Accounting = "per_outcome",
    angles: Mapping[str, tuple[float, float]] | None = None,
) -> CountTable:
    """Independent Poisson counts with mean rate * time * ((1 - eps) p + eps / 4)."""
    means = expected_counts(outcome_probs, rate, time, eps, accounting)
    counts = {sid: _sub_rng(seed, sid).poisson(mu) for sid, mu in means.items()}
    return CountTable(counts, means, rate, time, seed, eps, accounting, dict(angles or {}))


def estimate_E(n: np.ndarray) -> tuple[float, float]:
    """Correlation from four outcome counts and its first-order Poisson error."""
    n = np.asarray(n, dtype=float)
    total = n.sum()
    if total <= 0:
        raise ValueError("setting has zero total counts")
    signs = np.array([1, -1, -1, 1])
    E = float(signs @ n / total)
    var = float(((signs - E) ** 2) @ n) / total**2
    return E, math.sqrt(var)


def estimate_S(table: CountTable, use_expected: bool = False) -> tuple[float, float]:
    """CHSH S and its delta-method standard error from a four-setting count table."""
    src = table.expected if use_expected else table.counts
    missing = set(CHSH_SIGNS) - set(src)
    if missing:
        raise ValueError(f"count table lacks CHSH settings {sorted(missing)}")
    S, var = 0.0, 0.0
    for sid, sign in CHSH_SIGNS.items():
        E, sE = estimate_E(src[sid])
        S += sign * E
        var += sE**2
    return S, math.sqrt(var)


def chsh_probs(rho, settings: ChshSettings) -> dict[str, np.ndarray]:
    return {sid: outcome_probs(rho, *ang) for sid, ang in settings.pairs().items()}


def replicate_S(
    probs: Mapping[str, Sequence[float]],
    rate: float,
    time: float,
    eps: float,
    n_rep: int,
    seed: int = 0,
    accounting: Accounting = "per_outcome",
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded Monte Carlo replications; replication i uses master seed spawn (seed, i)."""
    S = np.empty(n_rep)
    sig = np.empty(n_rep)
    for i in range(n_rep):
        t = sample_counts(probs, rate, time, eps, _point_seed(seed, i), accounting)
        S[i], sig[i] = estimate_S(t)
    return S, sig


@dataclass(frozen=True)
class ScanPoint:
    delay: float
    gamma: float
    p_pp: float
    p_mp: float
    counts_pp: int | None = None
    counts_mp: int | None = None


def delay_scan(
    pair12: PureState,
    pair34: PureState,
    delays: Sequence[float],
    noise: NoiseParams,
    rate: float = FOURFOLD_RATE,
    time: float = INTEGRATION_TIME,
    seed: int = 0,
    sample: bool = True,
    source_prob: float = 1.0,
    herald: str = "pp",
) -> list[ScanPoint]:
    """(+,+) and (-,+) rates of photons 1 and 2p versus delay, heralded on modes 3 and 4p.

    Probabilities are conditional on the herald.  Counts use the heralded
    rate ``rate * source_prob * P(PBS) * P(herald)``.
    """
    theta = math.pi / 4
    points = []
    for i, d in enumerate(delays):
        g = overlap_from_delay(d, noise.coherence_length, noise.overlap_gamma)
        res = noisy_swap(pair12, pair34, g, ("3", "4p"), herald)
        p = outcome_probs(res.output, theta, theta)
        # (-,+): photon 1 at 135 deg, photon 2p at 45 deg
        p_pp, p_mp = float(p[0]), float(p[2])
        if not sample:
            points.append(ScanPoint(float(d), g, p_pp, p_mp))
            continue
        eff_rate = rate * source_prob * res.success_prob
        t = sample_counts({"pt": p}, eff_rate, time, noise.background_eps, _point_seed(seed, i))
        c = t.counts["pt"]
        points.append(ScanPoint(float(d), g, p_pp, p_mp, int(c[0]), int(c[2])))
    return points


def _point_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1)[0])


def _dip(d, plateau, vis, center, width):
    return plateau * (1 - vis * np.exp(-(((d - center) / width) ** 2)))


@dataclass(frozen=True)
class DipFit:
    visibility: float
    visibility_err: float
    plateau: float
    center: float
    width: float


def scan_visibility(points: Sequence[ScanPoint], use_counts: bool = True) -> DipFit:
    """Fit a Gaussian dip to the (-,+) channel; visibility is suppression relative to the plateau."""
    d = np.array([p.delay for p in points])
    if use_counts:
        y = np.array([p.counts_mp for p in points], dtype=float)
        sigma = np.sqrt(np.maximum(y, 1.0))
    else:
        y = np.array([p.p_mp for p in points])
        sigma = None
    span = d.max() - d.min()
    plateau0 = float(np.median(y[np.abs(d - d.mean()) > span / 4])) if len(d) > 4 else float(y.max())
    p0 = [plateau0, 1 - y.min() / plateau0 if plateau0 > 0 else 0.5, float(d[np.argmin(y)]), span / 6]
    with warnings.catch_warnings():
        # exact (unsampled) curves fit with zero residual and no covariance estimate
        warnings.simplefilter("ignore", OptimizeWarning)
        popt, pcov = curve_fit(_dip, d, y, p0=p0, sigma=sigma, absolute_sigma=sigma is not None, maxfev=20000)
    err = float(np.sqrt(pcov[1, 1])) if np.isfinite(pcov[1, 1]) else float("nan")
    return DipFit(float(popt[1]), err, float(popt[0]), float(popt[2]), abs(float(popt[3])))
