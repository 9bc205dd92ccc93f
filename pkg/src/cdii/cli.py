"""Command-line interface.

Every command prints a summary table to stderr and, when it writes a
container, the container path to stdout, so commands chain with pipes::

    cdii case constant-identity-2d | cdii recon-aniso

Commands read ``--input PATH``, or a container path from stdin when neither
``--input`` nor ``--case`` is given.

Exit codes: 0 ok, 1 usage or generic error, 2 hypothesis failure,
3 solver failure, 4 I/O or container error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import cases as cases_mod
from .conductivity import ConductivityField
from .container import FieldContainer, read_container, write_container
from .errors import CdiiError, ContainerError, HypothesisError
from .forward import (BoundaryCondition, MeasurementSet, SolverConfig, add_noise,
                      current_density, solve_conductivity)
from .global_recon import assemble_elliptic_system, solve_global
from .grid import Box, Grid, MatrixField
from .hypotheses import all_passed, build_Z, check_hypotheses, constraint_space, decomposition_coefficients
from .recon import (Anchor, curl_gamma_inverse, direct_curl, integrate_gradient, joint_pipeline,
                    log_beta_gradient, reconstruct_gamma_tilde)
from .report import write_csv, write_heatmaps

__all__ = ["main", "build_parser", "ExperimentConfig"]


@dataclass
class ExperimentConfig:
    """Resolved settings shared by all commands (CLI flags override ``--config`` JSON)."""

    case: str | None = None
    input: str | None = None
    grid: str | None = None
    h: str | None = None
    subdomain: str | None = None
    c0: float = 1e-8
    c1: float = 1e-8
    anchor: str | None = None
    noise: str | None = None
    solver: str = "direct"
    tol: float = 1e-10
    out: str = "cdii-out"
    method: str = "path"
    heatmaps: bool = True

    def validate(self):
        if not (self.c0 > 0 and self.c1 > 0):
            raise CdiiError("thresholds c0 and c1 must be positive")
        if self.input is not None and not Path(self.input).exists():
            raise ContainerError(f"input {self.input} does not exist")
        SolverConfig(self.solver, self.tol)
        return self

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.solver, self.tol)

    def out_dir(self) -> Path:
        p = Path(self.out)
        try:
            p.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ContainerError(f"cannot create output directory {p}: {exc}") from exc
        return p


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("common options")
    g.add_argument("--input", help="input container (default: path read from stdin)")
    g.add_argument("--case", help="analytic case name instead of an input container")
    g.add_argument("--grid", help="node counts for --case, e.g. 65x65 or 17x17x17")
    g.add_argument("--h", help="grid step for --case on its default box, e.g. 1/64")
    g.add_argument("--subdomain", help="physical box lo1,lo2[,lo3]:hi1,hi2[,hi3] (default: grid minus one layer)")
    g.add_argument("--c0", type=float, help="hypothesis threshold (default 1e-8)")
    g.add_argument("--c1", type=float, help="threshold for the codimension functional (default 1e-8)")
    g.add_argument("--anchor", help="x1,x2[,x3],value: known beta at a point")
    g.add_argument("--noise", help="level,radius,seed: smoothed noise added to the currents")
    g.add_argument("--solver", choices=["direct", "cg"], help="linear solver (default direct)")
    g.add_argument("--tol", type=float, help="solver tolerance (default 1e-10)")
    g.add_argument("--out", help="output directory (default ./cdii-out)")
    g.add_argument("--config", help="JSON file with any of the options above")
    g.add_argument("--no-heatmaps", dest="heatmaps", action="store_const", const=False,
                   help="skip pixmap output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdii", description="Conductivity reconstruction from internal current densities.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("case", help="sample an analytic case into a container")
    p.add_argument("name", choices=list(cases_mod.CATALOG))
    _common(p)
    for name, text in [("forward", "solve the forward problem for the stored boundary data"),
                       ("measure", "current densities from stored solutions (plus optional noise)"),
                       ("check-hyps", "report the hypothesis functionals"),
                       ("recon-aniso", "reconstruct the anisotropic part gamma_tilde"),
                       ("recon-global", "reconstruct gamma from the coupled elliptic system"),
                       ("curl", "curl of gamma^-1 from gamma and the currents")]:
        _common(sub.add_parser(name, help=text))
    p = sub.add_parser("recon-beta", help="reconstruct beta (and gamma = beta gamma_tilde)")
    p.add_argument("--method", choices=["path", "poisson", "both"], help="integration variant")
    p.add_argument("--isotropic", action="store_true", help="assume gamma_tilde = I")
    _common(p)
    p = sub.add_parser("sweep-noise", help="reconstruction errors over noise levels")
    p.add_argument("--levels", default="1e-4,1e-3,1e-2", help="comma separated noise levels")
    p.add_argument("--radius", type=float, default=0.05, help="smoothing radius (physical units)")
    p.add_argument("--seed", type=int, default=0)
    _common(p)
    return parser


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise ContainerError(f"cannot read config {args.config}: {exc}") from exc
        known = {f.name for f in fields(cfg)}
        unknown = set(data) - known
        if unknown:
            raise CdiiError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for k, v in data.items():
            setattr(cfg, k, v)
    for f in fields(cfg):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    return cfg.validate()


def _parse_h(text: str) -> float:
    try:
        h = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise CdiiError(f"bad grid step {text!r}") from None
    if h <= 0:
        raise CdiiError("grid step must be positive")
    return h


def _case_grid(case, cfg: ExperimentConfig) -> Grid:
    if cfg.grid:
        try:
            dims = [int(d) for d in cfg.grid.lower().split("x")]
        except ValueError:
            raise CdiiError(f"bad --grid {cfg.grid!r} (expected e.g. 65x65)") from None
        if len(dims) != case.n:
            raise CdiiError(f"case {case.name} is {case.n}-dimensional; --grid has {len(dims)} entries")
        return Grid.box(case.lo, case.hi, dims)
    h = _parse_h(cfg.h) if cfg.h else 1.0 / 32
    dims = [max(3, int(round((b - a) / h)) + 1) for a, b in zip(case.lo, case.hi)]
    return Grid.box(case.lo, case.hi, dims)


def case_container(case, grid: Grid) -> FieldContainer:
    """Sample an analytic case: ``gamma``, ``u1..``, ``H1..`` and the ``Omega`` weights."""
    fc = FieldContainer(grid, attrs={"case": case.name, "kind": "analytic"})
    fc.add("gamma", case.conductivity(grid).gamma)
    for k, u in enumerate(case.solution_fields(grid), 1):
        fc.add(f"u{k}", u)
    M = case.measurements(grid)
    for k, H in enumerate(M.currents, 1):
        fc.add(f"H{k}", H)
    if case.omega1 is not None:
        o1, o2 = case.omega_fields(grid)
        fc.add("omega1", o1).add("omega2", o2)
    return fc


def _load(cfg: ExperimentConfig) -> FieldContainer:
    if cfg.input:
        return read_container(cfg.input)
    if cfg.case:
        try:
            case = cases_mod.get_case(cfg.case)
        except KeyError as exc:
            raise CdiiError(str(exc.args[0])) from None
        return case_container(case, _case_grid(case, cfg))
    if sys.stdin is None or sys.stdin.isatty():
        raise CdiiError("no input: pass --input, --case, or pipe a container path on stdin")
    for line in sys.stdin:
        if line.strip():
            cfg.input = line.strip()
            return read_container(cfg.input)
    raise CdiiError("no container path on stdin")


def _measurements(fc: FieldContainer, cfg: ExperimentConfig) -> MeasurementSet:
    currents = fc.numbered("H")
    if len(currents) < fc.grid.n:
        raise ContainerError(f"container holds {len(currents)} current densities H1.., need at least {fc.grid.n}")
    sols = fc.numbered("u")
    bcs = tuple(BoundaryCondition.trace(sols[k]) if k < len(sols) else None for k in range(len(currents)))
    M = MeasurementSet(fc.grid, tuple(currents), kind=fc.attrs.get("kind", "numeric"), boundary=bcs)
    if cfg.noise:
        level, radius, seed = _noise(cfg.noise)
        M = add_noise(M, level, radius, seed)
    return M


def _noise(text: str):
    try:
        level, radius, seed = text.split(",")
        return float(level), float(radius), int(seed)
    except ValueError:
        raise CdiiError(f"bad --noise {text!r} (expected level,radius,seed)") from None


def _subdomain(grid: Grid, cfg: ExperimentConfig) -> Box:
    if not cfg.subdomain:
        return Box.interior(grid)
    try:
        lo, hi = cfg.subdomain.split(":")
        lo = [float(v) for v in lo.split(",")]
        hi = [float(v) for v in hi.split(",")]
    except ValueError:
        raise CdiiError(f"bad --subdomain {cfg.subdomain!r}") from None
    if len(lo) != grid.n or len(hi) != grid.n:
        raise CdiiError("--subdomain dimension does not match the grid")
    try:
        return Box.physical(grid, lo, hi).check(grid)
    except ValueError as exc:
        raise CdiiError(str(exc)) from None


def _anchor(grid: Grid, cfg: ExperimentConfig, box: Box, truth: ConductivityField | None) -> Anchor:
    if cfg.anchor:
        try:
            vals = [float(v) for v in cfg.anchor.split(",")]
        except ValueError:
            raise CdiiError(f"bad --anchor {cfg.anchor!r}") from None
        if len(vals) != grid.n + 1:
            raise CdiiError(f"--anchor needs {grid.n} coordinates and a value")
        return Anchor.at(grid, vals[:-1], vals[-1])
    if truth is None:
        raise CdiiError("no --anchor given and no true conductivity in the input")
    centre = tuple((a + b - 1) // 2 for a, b in zip(box.lo, box.hi))
    return Anchor(centre, float(truth.beta.values[centre]))


def _truth(fc: FieldContainer):
    return ConductivityField(fc["gamma"]) if "gamma" in fc else None


def _emit(cfg: ExperimentConfig, name: str, fc: FieldContainer, maps=()) -> Path:
    out = cfg.out_dir()
    path = write_container(out / f"{name}.cdii", fc)
    if cfg.heatmaps:
        for key in maps:
            write_heatmaps(out, f"{name}-{key}", fc[key])
    print(path)
    return path


def _say(*lines):
    for line in lines:
        print(line, file=sys.stderr)


def _err(a, b) -> float:
    return float(np.nanmax(np.abs(a - b)))


def cmd_case(args, cfg):
    case = cases_mod.get_case(args.name)
    grid = _case_grid(case, cfg)
    fc = case_container(case, grid)
    _say(f"case {case.name}: n={case.n}, dims={grid.dims}, h={grid.h:.6g}, "
         f"solutions={len(case.solutions)}, box={case.lo}..{case.hi}")
    _emit(cfg, "case", fc, maps=["gamma"])
    return 0


def cmd_forward(args, cfg):
    fc = _load(cfg)
    gamma = fc["gamma"]
    sols = fc.numbered("u")
    if not sols:
        raise ContainerError("forward needs boundary data stored as u1, u2, ...")
    out = FieldContainer(fc.grid, attrs={**fc.attrs, "kind": "numeric"}).add("gamma", gamma)
    rows = []
    for k, g in enumerate(sols, 1):
        try:
            u, res = solve_conductivity(gamma, BoundaryCondition.trace(g), cfg.solver_config(),
                                        return_residual=True)
        except CdiiError as exc:
            raise exc.at_stage(f"forward u{k}")
        out.add(f"u{k}", u).add(f"H{k}", current_density(gamma, u))
        rows.append((k, res, _err(u.values, g.values)))
    for key in ("omega1", "omega2"):
        if key in fc:
            out.add(key, fc[key])
    _say("solution  residual      max|u - u_in|", *[f"u{k:<8} {r:.3e}     {e:.3e}" for k, r, e in rows])
    write_csv(cfg.out_dir() / "forward.csv", ["solution", "residual", "max_abs_diff"], rows)
    _emit(cfg, "forward", out, maps=["u1"])
    return 0


def cmd_measure(args, cfg):
    fc = _load(cfg)
    out = FieldContainer(fc.grid, attrs=dict(fc.attrs))
    for key in ("gamma", "omega1", "omega2"):
        if key in fc:
            out.add(key, fc[key])
    sols = fc.numbered("u")
    if sols and "gamma" in fc:
        currents = [current_density(fc["gamma"], u) for u in sols]
        out.attrs["kind"] = "numeric"
    else:
        currents = fc.numbered("H")
    for k, u in enumerate(sols, 1):
        out.add(f"u{k}", u)
    M = MeasurementSet(fc.grid, tuple(currents))
    if cfg.noise:
        level, radius, seed = _noise(cfg.noise)
        M = add_noise(M, level, radius, seed)
        out.attrs["noise"] = {"level": level, "radius": radius, "seed": seed}
    for k, H in enumerate(M.currents, 1):
        out.add(f"H{k}", H)
    _say(f"measured {len(M)} current densities on {fc.grid.dims}" + (f", noise {cfg.noise}" if cfg.noise else ""))
    _emit(cfg, "measure", out, maps=["H1"])
    return 0


def cmd_check_hyps(args, cfg):
    fc = _load(cfg)
    M = _measurements(fc, cfg)
    box = _subdomain(fc.grid, cfg)
    omegas = (fc["omega1"], fc["omega2"]) if "omega1" in fc and "omega2" in fc else None
    gamma = fc["gamma"] if "gamma" in fc else None
    reports = check_hypotheses(M, box, cfg.c0, cfg.c1, gamma=gamma, omegas=omegas)
    _say(*[r.line() for r in reports])
    write_csv(cfg.out_dir() / "hypotheses.csv",
              ["hypothesis", "infimum", "threshold", "passed", "gating", "location"],
              [(r.hypothesis, r.infimum, r.threshold, r.passed, r.gating,
                " ".join(f"{c:.6g}" for c in r.location)) for r in reports])
    if not all_passed(reports):
        failed = [r.hypothesis for r in reports if r.gating and not r.passed]
        _say(f"hypothesis failure: {', '.join(failed)}")
        return HypothesisError.exit_code
    return 0


def _reconstruct_gt(M: MeasurementSet, box: Box, cfg: ExperimentConfig) -> MatrixField:
    try:
        cs = constraint_space(build_Z(decomposition_coefficients(M)), M.H)
        return reconstruct_gamma_tilde(cs, cfg.c1, box)
    except CdiiError as exc:
        raise exc.at_stage("gamma_tilde")


def cmd_recon_aniso(args, cfg):
    fc = _load(cfg)
    M = _measurements(fc, cfg)
    box = _subdomain(fc.grid, cfg)
    gt = _reconstruct_gt(M, box, cfg)
    out = FieldContainer(fc.grid, attrs=dict(fc.attrs)).add("gamma_tilde", gt)
    lines = [f"gamma_tilde reconstructed on {fc.grid.dims}, subdomain {box.lo}..{box.hi}",
             f"max |det - 1| = {float(np.nanmax(np.abs(np.linalg.det(gt[box]) - 1))):.3e}"]
    truth = _truth(fc)
    if truth is not None:
        err = _err(gt[box], truth.gamma_tilde[box])
        lines.append(f"max |gamma_tilde - true| = {err:.3e}")
        write_csv(cfg.out_dir() / "recon-aniso.csv", ["quantity", "value"], [("max_abs_error", err)])
        out.add("gamma", truth.gamma)
    _say(*lines)
    _emit(cfg, "recon-aniso", out, maps=["gamma_tilde"])
    return 0


def cmd_recon_beta(args, cfg):
    fc = _load(cfg)
    M = _measurements(fc, cfg)
    grid = fc.grid
    box = _subdomain(grid, cfg)
    truth = _truth(fc)
    anchor = _anchor(grid, cfg, box, truth)
    method = getattr(args, "method", None) or cfg.method
    if getattr(args, "isotropic", False):
        gt, source = MatrixField.constant(grid, np.eye(grid.n)), "identity (assumed)"
    elif "gamma_tilde" in fc:
        gt, source = fc["gamma_tilde"], "input field"
    else:
        gt, source = None, "reconstructed"
    res = joint_pipeline(M, anchor, box, method=method, gamma_tilde=gt, c0=cfg.c0, c1=cfg.c1)
    sub = grid.sub(box)
    out = FieldContainer(sub, attrs=dict(fc.attrs))
    out.add("beta", res.beta).add("gamma_rec", res.conductivity.gamma).add("F", res.log_beta_gradient)
    lines = [f"beta via {method} integration, gamma_tilde: {source}, anchor node {anchor.index} = {anchor.value:.6g}",
             f"integrability sup|dF| = {res.integrability:.3e}"]
    if res.discrepancy is not None:
        lines.append(f"path/poisson relative discrepancy = {res.discrepancy:.3e}")
    rows = []
    if truth is not None:
        tb = truth.beta.values[box.slices]
        eb = float(np.max(np.abs(res.beta.values - tb)))
        eg = float(np.max(np.abs(res.conductivity.values - truth.values[box.slices])))
        lines += [f"max |beta - true| = {eb:.3e}", f"max |gamma - true| = {eg:.3e}"]
        rows = [("beta_max_abs_error", eb), ("gamma_max_abs_error", eg)]
    write_csv(cfg.out_dir() / "recon-beta.csv", ["quantity", "value"],
              rows + [("integrability", res.integrability)]
              + ([("discrepancy", res.discrepancy)] if res.discrepancy is not None else []))
    _say(*lines)
    _emit(cfg, "recon-beta", out, maps=["beta"])
    return 0


def cmd_recon_global(args, cfg):
    fc = _load(cfg)
    M = _measurements(fc, cfg)
    if "omega1" not in fc or "omega2" not in fc:
        raise ContainerError("recon-global needs the weight fields omega1 and omega2")
    try:
        system = assemble_elliptic_system(M, fc["omega1"], fc["omega2"])
    except CdiiError as exc:
        raise exc.at_stage("assembly")
    try:
        res = solve_global(system, M, cfg.solver_config())
    except CdiiError as exc:
        raise exc.at_stage("global solve")
    out = FieldContainer(fc.grid, attrs=dict(fc.attrs)).add("gamma_rec", res.conductivity.gamma)
    for k, u in enumerate(res.solutions, 1):
        out.add(f"u{k}", u)
    lines = [f"coupled system: {system.unknowns} unknowns, residual {res.residual:.3e}",
             f"asymmetry of H [grad U]^-1 = {res.asymmetry:.3e}"]
    truth = _truth(fc)
    if truth is not None:
        diff = res.conductivity.values - truth.values
        l2 = float(np.sqrt(np.mean(np.sum(diff ** 2, axis=(-2, -1)))))
        lines.append(f"L2 |gamma - true| = {l2:.3e}, max = {float(np.max(np.abs(diff))):.3e}")
        write_csv(cfg.out_dir() / "recon-global.csv", ["quantity", "value"],
                  [("l2_error", l2), ("asymmetry", res.asymmetry), ("residual", res.residual)])
    _say(*lines)
    _emit(cfg, "recon-global", out, maps=["gamma_rec"])
    return 0


def cmd_curl(args, cfg):
    fc = _load(cfg)
    M = _measurements(fc, cfg)
    key = "gamma_rec" if "gamma_rec" in fc and "gamma" not in fc else "gamma"
    gamma = ConductivityField(fc[key])
    box = _subdomain(fc.grid, cfg)
    comps = curl_gamma_inverse(gamma, M.H)
    ref = direct_curl(gamma)
    out = FieldContainer(fc.grid, attrs=dict(fc.attrs))
    rows = []
    for (l, p, q), f in comps.items():
        name = f"curl_{l + 1}{p + 1}{q + 1}"
        out.add(name, f)
        rows.append((name, f.sup(box), _err(f[box], ref[(l, p, q)][box])))
    _say("component   sup|formula|    max|formula - direct|", *[f"{r[0]:<11} {r[1]:.3e}      {r[2]:.3e}" for r in rows])
    write_csv(cfg.out_dir() / "curl.csv", ["component", "sup", "max_abs_vs_direct"], rows)
    _emit(cfg, "curl", out, maps=[r[0] for r in rows[:1]])
    return 0


def cmd_sweep_noise(args, cfg):
    fc = _load(cfg)
    truth = _truth(fc)
    if truth is None:
        raise ContainerError("sweep-noise needs the true conductivity 'gamma' in the input")
    M0 = _measurements(fc, ExperimentConfig(**{**cfg.__dict__, "noise": None}))
    grid = fc.grid
    box = _subdomain(grid, cfg)
    anchor = _anchor(grid, cfg, box, truth)
    try:
        levels = [float(v) for v in args.levels.split(",")]
    except ValueError:
        raise CdiiError(f"bad --levels {args.levels!r}") from None
    gt_true = truth.gamma_tilde
    clean = integrate_gradient(log_beta_gradient(M0[0], M0[1], gt_true).restrict(box), anchor.shifted(box))
    n = grid.n
    aniso = (len(M0) - n) * n * (n - 1) // 2 >= n * (n + 1) // 2 - 1
    rows = []
    for level in levels:
        M = add_noise(M0, level, args.radius, args.seed)
        F = log_beta_gradient(M[0], M[1], gt_true).restrict(box)
        beta = integrate_gradient(F, anchor.shifted(box))
        eb = float(np.max(np.abs(np.log(beta.values) - np.log(clean.values))))
        row = [level, eb]
        if aniso:
            try:
                gt = _reconstruct_gt(M, box, cfg)
                row.append(_err(gt[box], gt_true[box]))
            except HypothesisError:
                row.append(float("nan"))
        rows.append(row)
    header = ["level", "log_beta_error"] + (["gamma_tilde_error"] if aniso else [])
    path = write_csv(cfg.out_dir() / "sweep-noise.csv", header, rows)
    _say("  ".join(f"{h:>18}" for h in header),
         *["  ".join(f"{v:18.6e}" for v in r) for r in rows])
    print(path)
    return 0


COMMANDS = {
    "case": cmd_case, "forward": cmd_forward, "measure": cmd_measure,
    "check-hyps": cmd_check_hyps, "recon-beta": cmd_recon_beta, "recon-aniso": cmd_recon_aniso,
    "recon-global": cmd_recon_global, "curl": cmd_curl, "sweep-noise": cmd_sweep_noise,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except CdiiError as exc:
        print(f"cdii {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"cdii {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
