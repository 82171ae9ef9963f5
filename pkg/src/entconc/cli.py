"""Command-line drivers.

Each command writes ``<command>.csv`` (one row per setting and outcome),
``<command>_summary.csv`` and ``<command>_report.txt`` into ``--out``.  The
report is itself a valid config: feeding it back through ``--config``
reproduces the run.
"""

from __future__ import annotations

import argparse
import cmath
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.optimize import brentq

from . import metrics, optics, protocols, stochastics
from .config import COMMANDS, ConfigError, ExperimentConfig, parse_config
from .qstate import ImpossibleBranch, PureState, apply_single_mode, fidelity_to_pure, psi_plus

EXIT_OK, EXIT_CONFIG, EXIT_IMPOSSIBLE = 0, 1, 2

CSV_COLUMNS = ("setting_id", "theta1", "theta2", "outcome", "probability", "counts")
SUMMARY_COLUMNS = ("label", "S", "sigma", "visibility", "fidelity", "success_prob")

# Bench values per window count: pre ratio, post ratio, S, sigma(S), fidelity
TABLE1_MEASURED = {
    1: (1.41, 1.08, 2.58, 0.07, 0.96),
    2: (1.72, 1.09, 2.43, 0.08, 0.93),
    4: (3.15, 1.10, 2.42, 0.08, 0.93),
}
# integration time multiplier per row (the four-window row ran twice as long)
TABLE1_TIME_FACTOR = {1: 1.0, 2: 1.0, 4: 2.0}


def fmt(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


@dataclass
class Report:
    command: str
    config: ExperimentConfig
    results: list[tuple[str, Any]] = field(default_factory=list)
    rows: list[tuple] = field(default_factory=list)
    summary: list[tuple] = field(default_factory=list)
    extra: dict[str, tuple[Sequence[str], list[tuple]]] = field(default_factory=dict)

    def add(self, key: str, value: Any) -> None:
        self.results.append((key, value))

    def text(self) -> str:
        lines = [f"# entconc {self.command} report", self.config.to_text().rstrip("\n"), "#"]
        lines += [f"# {k}: {fmt(v)}" for k, v in self.results]
        return "\n".join(lines) + "\n"


def _write_csv(path: Path, columns: Sequence[str], rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(x) for x in r])


def write_outputs(report: Report, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    name = report.command.replace("-", "_")
    paths = [out / f"{name}.csv", out / f"{name}_summary.csv", out / f"{name}_report.txt"]
    _write_csv(paths[0], CSV_COLUMNS, report.rows)
    _write_csv(paths[1], SUMMARY_COLUMNS, report.summary)
    paths[2].write_text(report.text(), encoding="utf-8", newline="\n")
    for fname, (cols, rows) in report.extra.items():
        p = out / fname
        _write_csv(p, cols, rows)
        paths.append(p)
    return paths


# --- pair preparation -------------------------------------------------------


def build_pair(
    cfg: ExperimentConfig, second: bool, windows: int | None = None
) -> tuple[protocols.PairSpec, PureState, float]:
    """Pair (1,2) or (3,4) and the probability its photons survive the windows."""
    modes = ("3", "4") if second else ("1", "2")
    alpha, beta = (cfg.alpha_34, cfg.beta_34) if second else (cfg.alpha, cfg.beta)
    phase = math.radians(cfg.phase_deg)
    if alpha is not None:
        spec = protocols.PairSpec(complex(alpha), beta * cmath.exp(1j * phase), *modes)
        return spec, protocols.prepare_pair(spec), 1.0
    n = cfg.windows if windows is None else windows
    s = protocols.prepare_pair(protocols.PairSpec(1 / math.sqrt(2), cmath.exp(1j * phase) / math.sqrt(2), *modes))
    prob = 1.0
    if n > 0:
        s, prob = protocols.degrade_pair(s, modes[0], optics.brewster_window(cfg.t_h, cfg.t_v, n))
    hv, vh = s.amplitude("HV"), s.amplitude("VH")
    return protocols.PairSpec(hv, vh, *modes), s, prob


def _windows_34(cfg: ExperimentConfig, protocol: str) -> int:
    if cfg.windows_34 is not None:
        return cfg.windows_34
    return 2 if protocol == "repeater-filtered" else cfg.windows


@dataclass
class Run:
    result: protocols.ProtocolResult
    source_prob: float
    pair12: PureState
    pair34: PureState


def run_protocol(cfg: ExperimentConfig, protocol: str) -> Run:
    spec12, s12, p12 = build_pair(cfg, False)
    spec34, s34, p34 = build_pair(cfg, True, _windows_34(cfg, protocol))
    gamma = cfg.overlap_gamma
    if protocol == "concentrate":
        if gamma < 1:
            res = stochastics.noisy_swap(s12, s34, gamma, ("3", "4p"), cfg.branch)
        else:
            res = protocols.concentrate(s12, s34, cfg.branch)
    elif protocol == "repeater":
        if gamma < 1:
            res = stochastics.noisy_swap(s12, s34, gamma, ("2p", "4p"), cfg.branch)
        else:
            res = protocols.repeater_swap(s12, s34, cfg.branch)
    elif protocol == "repeater-filtered":
        f12, q12 = protocols.filter_pair(spec12)
        f34, q34 = protocols.filter_pair(spec34)
        res = stochastics.noisy_swap(f12, f34, gamma, ("2p", "4p"), cfg.branch)
        res.success_prob *= q12 * q34
    elif protocol == "bell-swap":
        res = protocols.bell_swap(s12, s34)
    else:
        raise ConfigError(f"protocol: unknown {protocol!r}", key="protocol")
    if res.needs_phase_flip:
        # the known corrective Z on the first output photon turns Psi- back into Psi+
        res.output = apply_single_mode(res.output, res.output.modes[0], optics.phase_compensator(math.pi))
    return Run(res, p12 * p34, s12, s34)


# --- CHSH sampling ----------------------------------------------------------


def chsh_block(
    cfg: ExperimentConfig, rho, heralded_prob: float, seed: int, time: float | None = None, prefix: str = ""
) -> tuple[float, float, float, list[tuple]]:
    """Model S, estimated S and sigma, and CSV rows for the four CHSH settings."""
    settings = cfg.chsh_settings
    probs = stochastics.chsh_probs(rho, settings)
    S_model = metrics.chsh_S(rho, settings)
    rate = cfg.rate * heralded_prob
    t = cfg.time if time is None else time
    angles = settings.pairs()
    if cfg.ideal:
        means = stochastics.expected_counts(probs, rate, t, cfg.background_eps, cfg.accounting)
        table = stochastics.CountTable(means, means, rate, t, None, cfg.background_eps, cfg.accounting, angles)
        counts = means
    else:
        table = stochastics.sample_counts(probs, rate, t, cfg.background_eps, seed, cfg.accounting, angles)
        counts = table.counts
    S, sigma = stochastics.estimate_S(table)
    rows = []
    for sid, (t1, t2) in angles.items():
        for k, o in enumerate(metrics.OUTCOMES):
            rows.append((prefix + sid, math.degrees(t1), math.degrees(t2), o, probs[sid][k], counts[sid][k]))
    return S_model, S, sigma, rows


def basis_rows(rho, prefix: str = "") -> list[tuple]:
    rows = []
    for sid, th in (("hv", 0.0), ("pm", math.pi / 4)):
        p = metrics.outcome_probs(rho, th, th)
        for k, o in enumerate(metrics.OUTCOMES):
            rows.append((prefix + sid, math.degrees(th), math.degrees(th), o, p[k], None))
    return rows


# --- commands ---------------------------------------------------------------


def cmd_protocol(cfg: ExperimentConfig, protocol: str, command: str) -> Report:
    rep = Report(command, cfg)
    run = run_protocol(cfg, protocol)
    res = run.result
    rho = res.density
    in12 = metrics.hv_fractions(run.pair12)
    in34 = metrics.hv_fractions(run.pair34)
    rep.add("protocol", protocol)
    rep.add("pair12_state", repr(run.pair12))
    rep.add("pair34_state", repr(run.pair34))
    rep.add("pre_ratio_12", in12[4])
    rep.add("pre_ratio_34", in34[4])
    rep.add("window_transmission", run.source_prob)
    rep.add("pair12_fidelity", fidelity_to_pure(run.pair12, psi_plus("1", "2")))
    if protocol == "bell-swap":
        rep.add("note", "Bell-state swap is evaluated without distinguishability noise")
    else:
        rep.add("pbs_prob", res.pbs_prob)
        for b, p in res.branch_probs.items():
            rep.add(f"branch_{b}_prob", p)
            rep.add(f"branch_{b}_success", res.pbs_prob * p)
    rep.add("selected_branch", res.selected_outcome)
    rep.add("phase_flip_applied", res.needs_phase_flip)
    rep.add("success_prob", res.success_prob)
    rep.add("output_modes", " ".join(rho.modes))
    hh, hv, vh, vv, ratio = metrics.hv_fractions(rho)
    rep.add("post_fractions_HH_HV_VH_VV", f"{fmt(hh)} {fmt(hv)} {fmt(vh)} {fmt(vv)}")
    rep.add("post_ratio", ratio)
    fid = res.fidelity
    vis = metrics.pm_visibility(rho)
    rep.add("fidelity", fid)
    rep.add("pm_visibility", vis)
    S_model, S, sigma, rows = chsh_block(cfg, rho, run.source_prob * res.success_prob, cfg.seed)
    rep.add("S_model", S_model)
    rep.add("S_estimated", S)
    rep.add("S_sigma", sigma)
    rep.add("violation_sigma", metrics.violation_sigma(S, sigma))
    rep.add("fidelity_from_S", metrics.fidelity_from_S(min(max(S, 0.0), metrics.TSIRELSON)))
    rep.rows = rows + basis_rows(rho)
    rep.summary = [(protocol, S, sigma, vis, fid, res.success_prob)]
    return rep


def fit_gamma(cfg: ExperimentConfig, s12: PureState, s34: PureState, S_target: float, measured=("3", "4p")) -> float:
    """Overlap at which the model's CHSH value equals ``S_target`` (clamped to the model's range)."""
    settings = cfg.chsh_settings

    def S_of(g: float) -> float:
        return metrics.chsh_S(stochastics.noisy_swap(s12, s34, g, measured, cfg.branch).output, settings)

    lo, hi = S_of(0.0), S_of(1.0)
    if S_target <= lo:
        return 0.0
    if S_target >= hi:
        return 1.0
    return brentq(lambda g: S_of(g) - S_target, 0.0, 1.0, xtol=1e-14, rtol=1e-14)


def cmd_table1(cfg: ExperimentConfig) -> Report:
    rep = Report("table1", cfg)
    cols = (
        "windows", "pre_ratio", "post_ratio", "S_ideal", "gamma_fit", "S_model", "S_estimated",
        "sigma", "fidelity_from_S", "fidelity_model", "measured_pre_ratio", "measured_post_ratio",
        "measured_S", "measured_sigma", "measured_fidelity",
    )
    table = []
    for i, n in enumerate((1, 2, 4)):
        row_cfg = cfg.replace(windows=n, windows_34=n, alpha=None, beta=None, alpha_34=None, beta_34=None)
        _, s12, q12 = build_pair(row_cfg, False)
        _, s34, q34 = build_pair(row_cfg, True)
        pre = metrics.hv_fractions(s12)[4]
        ideal = protocols.concentrate(s12, s34, cfg.branch)
        post = metrics.hv_fractions(ideal.output)[4]
        S_ideal = metrics.chsh_S(ideal.output, cfg.chsh_settings)
        m_pre, m_post, m_S, m_sig, m_F = TABLE1_MEASURED[n]
        g = fit_gamma(cfg, s12, s34, m_S)
        res = stochastics.noisy_swap(s12, s34, g, ("3", "4p"), cfg.branch)
        seed = stochastics._point_seed(cfg.seed, i)
        S_model, S, sigma, rows = chsh_block(
            cfg, res.output, q12 * q34 * res.success_prob, seed,
            cfg.time * TABLE1_TIME_FACTOR[n], prefix=f"bw{n}:",
        )
        F_S = metrics.fidelity_from_S(min(max(S, 0.0), metrics.TSIRELSON))
        F_model = res.fidelity
        table.append((n, pre, post, S_ideal, g, S_model, S, sigma, F_S, F_model, m_pre, m_post, m_S, m_sig, m_F))
        rep.rows += rows
        rep.summary.append((f"bw{n}", S, sigma, metrics.pm_visibility(res.output), F_S, res.success_prob))
        rep.add(f"bw{n}_pre_ratio", pre)
        rep.add(f"bw{n}_post_ratio", post)
        rep.add(f"bw{n}_gamma_fit", g)
        rep.add(f"bw{n}_S", f"{fmt(S)} +- {fmt(sigma)}")
        rep.add(f"bw{n}_fidelity_from_S", F_S)
    rep.extra["table1_rows.csv"] = (cols, table)
    return rep


def cmd_delay_scan(cfg: ExperimentConfig) -> Report:
    rep = Report("delay-scan", cfg)
    _, s12, q12 = build_pair(cfg, False)
    _, s34, q34 = build_pair(cfg, True)
    L = cfg.coherence_length_um
    delays = np.linspace(-cfg.scan_span * L, cfg.scan_span * L, cfg.scan_points)
    pts = stochastics.delay_scan(
        s12, s34, delays, cfg.noise, cfg.rate, cfg.scan_time, cfg.seed,
        sample=not cfg.ideal, source_prob=q12 * q34, herald=cfg.branch,
    )
    fit = stochastics.scan_visibility(pts, use_counts=not cfg.ideal)
    rep.add("coherence_length_um", L)
    rep.add("gamma0", cfg.overlap_gamma)
    rep.add("dip_visibility", fit.visibility)
    rep.add("dip_visibility_err", fit.visibility_err)
    rep.add("dip_center_um", fit.center)
    rep.add("dip_width_um", fit.width)
    rep.add("plateau", fit.plateau)
    scan_rows = []
    for i, p in enumerate(pts):
        sid = f"d{i:03d}"
        rep.rows.append((sid, 135.0, 45.0, "-+", p.p_mp, p.counts_mp))
        rep.rows.append((sid, 45.0, 45.0, "++", p.p_pp, p.counts_pp))
        scan_rows.append((p.delay, p.gamma, p.p_pp, p.p_mp, p.counts_pp, p.counts_mp))
    rep.extra["delay_scan_points.csv"] = (
        ("delay_um", "gamma", "p_pp", "p_mp", "counts_pp", "counts_mp"),
        scan_rows,
    )
    rep.summary = [("delay-scan", None, fit.visibility_err, fit.visibility, None, None)]
    return rep


def run(command: str, cfg: ExperimentConfig) -> Report:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cfg = cfg.replace(command=command)
    if command == "table1":
        return cmd_table1(cfg)
    if command == "delay-scan":
        return cmd_delay_scan(cfg)
    if command == "chsh":
        return cmd_protocol(cfg, cfg.protocol, command)
    return cmd_protocol(cfg, command, command)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="entconc", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS, help="experiment to run (default: 'command' key of the config)")
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--ideal", action="store_true", help="use expected counts instead of sampling")
    p.add_argument("--branch", choices=protocols.BRANCHES, help="+/- outcome kept on the measured pair")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text)
        changes: dict[str, Any] = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.ideal:
            changes["ideal"] = True
        if args.branch:
            changes["branch"] = args.branch
        cfg = cfg.replace(**changes) if changes else cfg
        command = args.command or cfg.command
        if command is None:
            raise ConfigError("no command given on the command line or in the config")
        report = run(command, cfg)
    except ImpossibleBranch as e:
        print(f"impossible branch: {e}", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    except (ValueError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    for path in write_outputs(report, args.out):
        print(path)
    sys.stdout.write(report.text())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
