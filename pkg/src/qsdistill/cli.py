"""Command-line front end.

Every command writes CSV (``audit`` writes an aligned text report) to
standard output or to ``--out``. ``fig1`` and ``fig2`` cross-check each closed-form
value against the density-matrix simulation before writing anything, and
exit with status 1 if any check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .classify import classify
from .dynamics import (
    BathParams,
    default_dt,
    literal_p3_p4,
    published_concurrence_c1,
    published_distilled_forms,
    published_distilled_matrix,
    rk4_trajectory,
    thermal_solution,
    vacuum_solution,
)
from .errors import CrossCheckError, QsDistillError
from .protocol import NotTarget, Policy, ProtocolConfig, VACUUM_CONFIG, predicted_rank2, run_protocol
from .states import BellState, DensityMatrix, concurrence, fidelity_with_pure, rank2_state, x_state_concurrence

COMMANDS = ("fig1", "fig2", "fig3", "evolve", "distill", "classify", "audit")
CROSS_TOL = 1e-10

_DEFAULT_NBAR = {"fig3": 0.001, "audit": 0.001}
_DEFAULT_POINTS = {"audit": 11}
_DEFAULT_POLICY = {"fig3": "both"}


class UsageError(QsDistillError, ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    gamma: float = 1.0
    nbar: float = 0.0
    t_max: float = 5.0
    points: int = 200
    p1: Optional[float] = None
    policy: str = "strict-pm"
    not_target: str = "source"
    sz: bool = False
    dt: Optional[float] = None
    output: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise UsageError(f"--gamma must be positive, got {self.gamma}")
        if not (math.isfinite(self.nbar) and self.nbar >= 0):
            raise UsageError(f"--nbar must be nonnegative, got {self.nbar}")
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise UsageError(f"--tmax must be positive, got {self.t_max}")
        if self.points < 2:
            raise UsageError(f"--points must be at least 2, got {self.points}")
        if self.p1 is not None and not 0.0 < self.p1 < 1.0:
            raise UsageError(f"--p1 must lie in (0, 1), got {self.p1}")
        if self.dt is not None and not (math.isfinite(self.dt) and self.dt > 0):
            raise UsageError(f"--dt must be positive, got {self.dt}")
        if self.policy not in ("strict-pm", "both"):
            raise UsageError(f"--policy must be strict-pm or both, got {self.policy!r}")
        if self.not_target not in ("source", "ancilla"):
            raise UsageError(f"--not must be source or ancilla, got {self.not_target!r}")

    @property
    def bath(self) -> BathParams:
        return BathParams(self.gamma, self.nbar)

    @property
    def protocol(self) -> ProtocolConfig:
        return ProtocolConfig.from_policy(Policy(self.policy), NotTarget(self.not_target), self.sz)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.points)


class CsvTable(NamedTuple):
    header: tuple
    rows: list


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    x = float(x)
    if x == 0.0:
        return "0"
    return format(x, ".12g")


def render_csv(table: CsvTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _p1_grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(0.0, 1.0, cfg.points + 2)[1:-1]


def _cross(name: str, formula: float, simulated: float, where: str) -> None:
    if not abs(formula - simulated) <= CROSS_TOL:
        raise CrossCheckError(
            f"{name} at {where}: formula {formula!r} vs simulation {simulated!r} "
            f"(|diff| = {abs(formula - simulated):.3e} > {CROSS_TOL:g})"
        )


def cmd_fig1(cfg: RunConfig) -> CsvTable:
    """Input and distilled concurrence when both ``+-`` and ``-+`` are kept."""
    rows = []
    both = ProtocolConfig.from_policy(Policy.BOTH_PM_MP)
    for p1 in _p1_grid(cfg):
        rho = rank2_state(p1)
        _, c_pred = predicted_rank2(p1, Policy.BOTH_PM_MP)
        res = run_protocol(rho, rho, both)
        _cross("c_initial", p1, concurrence(rho), f"p1={p1:.12g}")
        _cross("c_distilled", c_pred, res.distilled_concurrence, f"p1={p1:.12g}")
        rows.append((p1, p1, c_pred))
    return CsvTable(("p1", "c_initial", "c_distilled"), rows)


def cmd_fig2(cfg: RunConfig) -> CsvTable:
    """Success probability for the strict ``+-`` and the ``+-``/``-+`` policies."""
    rows = []
    for p1 in _p1_grid(cfg):
        rho = rank2_state(p1)
        entry = [p1]
        for policy in (Policy.STRICT_PM, Policy.BOTH_PM_MP):
            p_pred, _ = predicted_rank2(p1, policy)
            res = run_protocol(rho, rho, ProtocolConfig.from_policy(policy))
            _cross(f"p_{policy.value}", p_pred, res.accepted_prob, f"p1={p1:.12g}")
            entry.append(p_pred)
        rows.append(tuple(entry))
    return CsvTable(("p1", "p_strict", "p_both"), rows)


def cmd_fig3(cfg: RunConfig) -> CsvTable:
    """Undistilled and distilled concurrence along the thermal trajectory."""
    bath = cfg.bath
    proto = cfg.protocol
    rows = []
    for t in cfg.times():
        rho = thermal_solution(t, bath)
        res = run_protocol(rho, rho, proto)
        forms = published_distilled_forms(t, bath)
        rows.append(
            (
                bath.gamma * t,
                concurrence(rho),
                res.distilled_concurrence,
                res.accepted_prob,
                published_concurrence_c1(t, bath),
                forms.cd,
            )
        )
    return CsvTable(("tau", "c_undistilled", "c_distilled", "p_success", "c1_published", "c2_published"), rows)


def _evolve_states(cfg: RunConfig) -> list[DensityMatrix]:
    times = cfg.times()
    if cfg.dt is None:
        return [thermal_solution(t, cfg.bath) for t in times]
    return rk4_trajectory(BellState.PHI_MINUS.projector, cfg.bath, times, cfg.dt)


def cmd_evolve(cfg: RunConfig) -> CsvTable:
    """Density-matrix entries and concurrence over time.

    Uses the closed form, or RK4 at step ``--dt`` when that flag is given.
    """
    header = ["tau"]
    for i in range(4):
        for j in range(4):
            header += [f"re_{i}{j}", f"im_{i}{j}"]
    header.append("concurrence")
    rows = []
    for t, rho in zip(cfg.times(), _evolve_states(cfg)):
        row = [cfg.gamma * t]
        for z in rho.m.reshape(16):
            row += [z.real, z.imag]
        row.append(concurrence(rho))
        rows.append(tuple(row))
    return CsvTable(tuple(header), rows)


def _input_state(cfg: RunConfig) -> DensityMatrix:
    if cfg.p1 is not None:
        return rank2_state(cfg.p1)
    return thermal_solution(cfg.t_max, cfg.bath)


def _nearest_bell(rho: DensityMatrix) -> tuple[str, float]:
    fids = [(fidelity_with_pure(rho, b.vector), b.value) for b in BellState]
    f, name = max(fids, key=lambda x: x[0])
    return name, f


def cmd_distill(cfg: RunConfig) -> CsvTable:
    """One protocol round on two copies of the input state.

    The input is ``rank2_state(--p1)`` when ``--p1`` is given, otherwise the
    thermal-bath state at time ``--tmax``.
    """
    rho = _input_state(cfg)
    proto = cfg.protocol
    res = run_protocol(rho, rho, proto)
    rows = []
    for o, st in res.conditional_sources.items():
        name, fid = _nearest_bell(st) if st is not None else ("", None)
        conc = concurrence(st) if st is not None else None
        rows.append((o.value, "1" if o in proto.accepted else "0", res.outcome_probs[o], name, fid, conc))
    name, fid = _nearest_bell(res.distilled)
    rows.append(("distilled", "1", res.accepted_prob, name, fid, res.distilled_concurrence))
    return CsvTable(("outcome", "accepted", "prob", "nearest_bell", "fidelity", "concurrence"), rows)


def cmd_classify(cfg: RunConfig) -> CsvTable:
    """Family, verdict and witness for ``rank2_state(--p1)`` or the thermal state at ``--tmax``."""
    fc, v, witness = classify(_input_state(cfg))
    return CsvTable(
        ("family", "verdict", "witness"),
        [(fc.value, v.value if v is not None else "none", "found" if witness is not None else "none")],
    )


def _report_table(title: str, header: Sequence[str], rows, width: int = 14) -> list[str]:
    lines = [title, "-" * len(title)]
    lines.append("".join(f"{h:>{width}}" for h in header))
    for row in rows:
        cells = []
        for v in row:
            cells.append(f"{v:>{width}.6e}" if not isinstance(v, str) else f"{v:>{width}}")
        lines.append("".join(cells))
    return lines


def cmd_audit(cfg: RunConfig) -> str:
    """Side-by-side comparison of the published formulas with simulation.

    Three blocks: the closed-form thermal state against RK4, the published
    concurrence formula against the Wootters value, and the published
    distilled-state quantities against the simulated protocol (NOT on the
    ancilla, keep ``+-``, then ``sigma_z``). Divergence is reported, never
    raised.
    """
    bath = cfg.bath
    times = cfg.times()
    dt = cfg.dt if cfg.dt is not None else default_dt(bath)
    out = [
        f"published-formula audit: gamma={fmt(bath.gamma)} nbar={fmt(bath.nbar)} "
        f"tmax={fmt(cfg.t_max)} points={cfg.points} dt={fmt(dt)}",
        "",
    ]

    rk4 = rk4_trajectory(BellState.PHI_MINUS.projector, bath, times, dt)
    rows, worst_rk4 = [], 0.0
    for t, r in zip(times, rk4):
        diff = float(np.abs(r.m - thermal_solution(t, bath).m).max())
        row = [bath.gamma * t, diff]
        if bath.nbar == 0:
            row.append(float(np.abs(r.m - vacuum_solution(t, bath.gamma).m).max()))
        worst_rk4 = max(worst_rk4, diff)
        rows.append(row)
    header = ["tau", "|rk4-closed|"] + (["|rk4-vacuum|"] if bath.nbar == 0 else [])
    out += _report_table("[1] closed-form thermal state vs RK4 (max entry difference)", header, rows)
    status = "within" if worst_rk4 <= 1e-6 else "EXCEEDS"
    out += [f"max |rk4-closed| = {worst_rk4:.3e} ({status} 1e-6)", ""]

    rows, worst_c1 = [], 0.0
    for t in times:
        rho = thermal_solution(t, bath)
        c1 = published_concurrence_c1(t, bath)
        cw = concurrence(rho)
        worst_c1 = max(worst_c1, abs(c1 - cw))
        rows.append([bath.gamma * t, c1, cw, x_state_concurrence(rho), abs(c1 - cw)])
    out += _report_table(
        "[2] published concurrence C1 (1/4 sqrt prefactor) vs Wootters",
        ["tau", "c1_published", "c_wootters", "c_xstate", "|diff|"],
        rows,
    )
    out += [f"max |c1_published - c_wootters| = {worst_c1:.3e}", ""]

    rows, worst_p, worst_c2, worst_tr = [], 0.0, 0.0, 0.0
    for t in times:
        rho = thermal_solution(t, bath)
        f = published_distilled_forms(t, bath)
        res = run_protocol(rho, rho, VACUUM_CONFIG)
        tr_published = float(np.trace(published_distilled_matrix(t, bath)).real)
        worst_p = max(worst_p, abs(f.P - res.accepted_prob))
        worst_c2 = max(worst_c2, abs(f.cd - res.distilled_concurrence))
        worst_tr = max(worst_tr, abs(tr_published - 1.0))
        rows.append(
            [
                bath.gamma * t,
                f.P,
                res.accepted_prob,
                abs(f.P - res.accepted_prob),
                f.cd,
                res.distilled_concurrence,
                abs(f.cd - res.distilled_concurrence),
                tr_published,
            ]
        )
    out += _report_table(
        "[3] published distilled state vs simulated protocol (NOT on ancilla, keep +-, sigma_z)",
        ["tau", "P_published", "P_sim", "|dP|", "C2_published", "C_sim", "|dC|", "tr(rho_d)"],
        rows,
    )
    out += [
        f"max |P_published - P_sim| = {worst_p:.3e}",
        f"max |C2_published - C_sim| = {worst_c2:.3e}",
        f"max |tr(published distilled matrix) - 1| = {worst_tr:.3e}",
        "",
    ]

    rows = []
    for t in times:
        f = published_distilled_forms(t, bath)
        l3, l4 = literal_p3_p4(t, bath)
        rows.append([bath.gamma * t, f.p1 + f.p2 + f.p3 + f.p4, f.p1 + f.p2 + l3 + l4])
    out += _report_table(
        "[4] eigenvalue grouping: sum P1..P4 with (1-c)/4 +/- a/2 vs literal (1-c)/8 +/- a/2",
        ["tau", "sum_grouped", "sum_literal"],
        rows,
    )
    return "\n".join(out) + "\n"


_DISPATCH = {
    "fig1": cmd_fig1,
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "evolve": cmd_evolve,
    "distill": cmd_distill,
    "classify": cmd_classify,
    "audit": cmd_audit,
}


def run(cfg: RunConfig) -> str:
    result = _DISPATCH[cfg.command](cfg)
    return result if isinstance(result, str) else render_csv(result)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gamma", type=float, default=1.0, help="damping rate (default 1)")
    common.add_argument("--nbar", type=float, default=None, help="mean thermal photon number")
    common.add_argument("--tmax", type=float, default=5.0, help="final time, or evaluation time for distill/classify")
    common.add_argument("--points", type=int, default=None, help="grid size")
    common.add_argument("--p1", type=float, default=None, help="rank-2 state weight in (0, 1)")
    common.add_argument(
        "--policy", choices=("strict-pm", "both"), default=None, help="accepted ancilla outcomes: +- only, or +- and -+"
    )
    common.add_argument(
        "--not", dest="not_target", choices=("source", "ancilla"), default="source", help="copy that receives Alice's NOT"
    )
    common.add_argument("--sz", action="store_true", help="apply Alice's sigma_z after success")
    common.add_argument("--dt", type=float, default=None, help="RK4 step (default 1e-4/(gamma(1+2 nbar)))")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    parser = argparse.ArgumentParser(
        prog="qsdistill",
        description="Quasi-separability, finite-copy distillation and singlet decay in thermal baths.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fig1": "initial vs distilled concurrence, both outcomes accepted",
        "fig2": "success probability, strict vs both outcomes",
        "fig3": "undistilled vs distilled concurrence along the thermal trajectory",
        "evolve": "density-matrix entries and concurrence over time",
        "distill": "one protocol round, per-outcome table",
        "classify": "family, verdict and separable witness",
        "audit": "published formulas vs simulation report",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cmd = ns.command
    return RunConfig(
        command=cmd,
        gamma=ns.gamma,
        nbar=ns.nbar if ns.nbar is not None else _DEFAULT_NBAR.get(cmd, 0.0),
        t_max=ns.tmax,
        points=ns.points if ns.points is not None else _DEFAULT_POINTS.get(cmd, 200),
        p1=ns.p1,
        policy=ns.policy if ns.policy is not None else _DEFAULT_POLICY.get(cmd, "strict-pm"),
        not_target=ns.not_target,
        sz=ns.sz,
        dt=ns.dt,
        output=ns.out,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except UsageError as exc:
        parser.error(str(exc))
    try:
        text = run(cfg)
    except CrossCheckError as exc:
        print(f"qsdistill: cross-check failed: {exc}", file=sys.stderr)
        return 1
    except QsDistillError as exc:
        print(f"qsdistill: {exc}", file=sys.stderr)
        return 1
    if cfg.output is None:
        sys.stdout.write(text)
        return 0
    try:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"qsdistill: cannot write {cfg.output}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
