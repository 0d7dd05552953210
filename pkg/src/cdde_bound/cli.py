"""Command-line front end.

``cdde-bound check|bound|simulate|verify PROBLEM.json [flags]``

The problem file is JSON with a ``system`` section (matrices as arrays of
row arrays, vectors as arrays), an optional ``scenario`` section using the
signal presets, and an optional ``options`` section (alpha_step, step,
t_end, xi).  Exit codes: 0 all checks pass, 1 hypothesis or verification
failure, 2 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .certificate import (BoundCertificate, CertificateError, compute_certificate,
                          sample_staircase)
from .model import SystemSpec, validate_structure
from .simulator import (InvalidScenario, SignalSpec, SimulationScenario,
                        default_scenario, simulate, verify_domination,
                        write_trajectory_csv)
from .stability import check_joint_condition

DEFAULT_ALPHA_STEP = 1e-3
DEFAULT_SIM_STEP = 1e-3
DEFAULT_T_END = 40.0
VERIFY_GRID = [(0.0, 0.0), (0.0, 1.0), (0.5, 0.0), (0.5, 1.0), (1.0, 0.0), (1.0, 1.0)]


class ProblemFormatError(ValueError):
    pass


def _signal_from_config(cfg, dim: int, name: str) -> SignalSpec:
    if isinstance(cfg, (list, tuple)):
        sig = SignalSpec.constant(cfg)
    elif isinstance(cfg, dict):
        try:
            sig = SignalSpec(kind=cfg["kind"],
                             amplitude=tuple(cfg["amplitude"]),
                             frequency=tuple(cfg.get("frequency", ())),
                             offset=float(cfg.get("offset", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProblemFormatError(f"scenario.{name}: {exc}") from exc
    else:
        raise ProblemFormatError(f"scenario.{name} must be a signal object or an array")
    if sig.dim != dim:
        raise ProblemFormatError(f"scenario.{name} must have dimension {dim}, got {sig.dim}")
    return sig


def load_problem(path) -> tuple[SystemSpec, dict | None, dict]:
    """Parse a problem file into (system, raw scenario config, options)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ProblemFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict) or "system" not in doc:
        raise ProblemFormatError("problem file must be an object with a 'system' section")
    sysd = doc["system"]
    try:
        spec = SystemSpec(A=sysd["A"], B=sysd["B"], C=sysd["C"], D=sysd["D"],
                          h_max=float(sysd["h_max"]),
                          omega_bar=sysd["omega_bar"], d_bar=sysd["d_bar"],
                          psi_bar=sysd["psi_bar"], phi_bar=sysd["phi_bar"])
    except KeyError as exc:
        raise ProblemFormatError(f"system section missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"system section: {exc}") from exc
    scenario_cfg = doc.get("scenario")
    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise ProblemFormatError("options must be an object")
    return spec, scenario_cfg, options


def build_scenario(spec: SystemSpec, scenario_cfg, *, a: float, b: float,
                   t_end: float, step: float) -> SimulationScenario:
    """Scenario from the file section (scaled by a, b) or the default preset."""
    if scenario_cfg is None:
        return default_scenario(spec, a=a, b=b, t_end=t_end, step=step)
    if not isinstance(scenario_cfg, dict):
        raise ProblemFormatError("scenario must be an object")
    omega = _signal_from_config(scenario_cfg.get("omega", [0.0] * spec.n), spec.n, "omega")
    d_sig = _signal_from_config(scenario_cfg.get("d", [0.0] * spec.m), spec.m, "d")
    h1 = _signal_from_config(scenario_cfg.get("h1", [spec.h_max]), 1, "h1")
    h2 = _signal_from_config(scenario_cfg.get("h2", [spec.h_max]), 1, "h2")
    psi = scenario_cfg.get("psi", spec.psi_bar.tolist())
    phi = _signal_from_config(scenario_cfg.get("phi", spec.phi_bar.tolist()), spec.m, "phi")
    try:
        return SimulationScenario(spec=spec, omega=omega.scaled(a), d=d_sig.scaled(b),
                                  h1=h1, h2=h2, psi=np.asarray(psi, dtype=float),
                                  phi=phi, t_end=t_end, step=step)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"scenario: {exc}") from exc


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_staircase_csv(path, cert: BoundCertificate, t_end: float, step: float) -> None:
    times = np.arange(int(round(t_end / step)) + 1) * step
    xb, yb = sample_staircase(cert, times)
    n, m = xb.shape[1], yb.shape[1]
    header = ["t"] + [f"xb_{i + 1}" for i in range(n)] + [f"yb_{j + 1}" for j in range(m)]
    data = np.hstack([times[:, None], xb, yb])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.9g}" for v in row) + "\n")


def _fmt_vec(v: np.ndarray) -> str:
    return "[" + ", ".join(f"{x:.6g}" for x in v) + "]"


def cmd_check(args) -> int:
    spec, _, _ = load_problem(args.problem)
    findings = validate_structure(spec)
    for f in findings:
        print(f"FAIL structure: {f}")
    report = check_joint_condition(spec, _parse_xi(args, spec))
    checks = [
        ("A is Metzler", report.a_is_metzler),
        ("B, C, D nonnegative", report.bcd_nonnegative),
        ("D is Schur", report.d_is_schur),
        ("joint stability condition", report.joint_condition_holds),
    ]
    for label, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {label}")
    if report.joint_condition_holds:
        print(f"witness p = {_fmt_vec(report.witness_p)}")
        print(f"witness q = {_fmt_vec(report.witness_q)}")
    elif report.diagnostic:
        print(f"diagnostic: {report.diagnostic}")
    return 0 if not findings and all(ok for _, ok in checks) else 1


def _parse_xi(args, spec: SystemSpec):
    raw = getattr(args, "xi", None)
    if raw is None:
        return None
    try:
        xi = [float(tok) for tok in raw.split(",")]
    except ValueError as exc:
        raise ProblemFormatError(f"--xi: {exc}") from exc
    if len(xi) != spec.n + spec.m:
        raise ProblemFormatError(f"--xi must have {spec.n + spec.m} entries, got {len(xi)}")
    return xi


def _options(args, options: dict):
    alpha_step = float(getattr(args, "alpha_step", None) or options.get("alpha_step", DEFAULT_ALPHA_STEP))
    step = float(getattr(args, "step", None) or options.get("step", DEFAULT_SIM_STEP))
    t_end = float(getattr(args, "t_end", None) or options.get("t_end", DEFAULT_T_END))
    return alpha_step, step, t_end


def _certificate_summary(cert: BoundCertificate) -> str:
    lines = [
        f"eta      = {_fmt_vec(cert.eta)}",
        f"varsigma = {_fmt_vec(cert.varsigma)}",
        f"p        = {_fmt_vec(cert.p)}",
        f"q        = {_fmt_vec(cert.q)}",
        f"mu       = {cert.mu:.6g} (decay factor {1 - cert.mu:.6g} per dwell)",
        f"T        = {cert.convergence.T:.6g}",
        f"T_star   = {cert.T_star:.6g}",
        f"constant_bound = {cert.constant_bound}",
    ]
    return "\n".join(lines)


def cmd_bound(args) -> int:
    spec, _, options = load_problem(args.problem)
    alpha_step, step, t_end = _options(args, options)
    xi = _parse_xi(args, spec) or options.get("xi")
    try:
        cert = compute_certificate(spec, alpha_step=alpha_step, xi=xi)
    except CertificateError as exc:
        print(f"FAIL {exc}", file=sys.stderr)
        return 1
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_json(outdir / "certificate.json", cert.to_dict())
    _write_staircase_csv(outdir / "staircase.csv", cert, t_end, step)
    print(_certificate_summary(cert))
    print(f"wrote {outdir / 'certificate.json'} and {outdir / 'staircase.csv'}")
    return 0


def cmd_simulate(args) -> int:
    spec, scenario_cfg, options = load_problem(args.problem)
    _, step, t_end = _options(args, options)
    scenario = build_scenario(spec, scenario_cfg, a=args.a, b=args.b,
                              t_end=t_end, step=step)
    try:
        traj = simulate(scenario)
    except InvalidScenario as exc:
        print(f"FAIL scenario: {exc}", file=sys.stderr)
        return 1
    write_trajectory_csv(traj, args.out)
    print(f"wrote {args.out} ({traj.times.shape[0]} rows)")
    return 0


def cmd_verify(args) -> int:
    spec, scenario_cfg, options = load_problem(args.problem)
    alpha_step, step, t_end = _options(args, options)
    xi = _parse_xi(args, spec) or options.get("xi")
    try:
        cert = compute_certificate(spec, alpha_step=alpha_step, xi=xi)
    except CertificateError as exc:
        print(f"FAIL {exc}", file=sys.stderr)
        return 1
    if args.a is not None or args.b is not None:
        combos = [(args.a if args.a is not None else 1.0,
                   args.b if args.b is not None else 1.0)]
    else:
        combos = VERIFY_GRID

    def run(combo):
        a, b = combo
        scenario = build_scenario(spec, scenario_cfg, a=a, b=b, t_end=t_end, step=step)
        return verify_domination(simulate(scenario), cert)

    workers = int(os.environ.get("CDDE_BOUND_THREADS", "1"))
    if workers > 1 and len(combos) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, combos))
    else:
        reports = [run(c) for c in combos]

    ok = True
    for (a, b), rep in zip(combos, reports):
        status = "OK" if rep.ok else f"VIOLATION at t={rep.first_violation_time:g}"
        print(f"a={a:g} b={b:g}: x margins {_fmt_vec(rep.x_margin)} "
              f"y margins {_fmt_vec(rep.y_margin)} -> {status}")
        ok = ok and rep.ok
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdde-bound",
        description="Componentwise state bounds for positive coupled "
                    "differential-difference systems, with a validating simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="validate structure and stability hypotheses")
    p_check.add_argument("problem")
    p_check.add_argument("--xi", help="comma-separated positive weights for the witness solve")
    p_check.set_defaults(func=cmd_check)

    p_bound = sub.add_parser("bound", help="compute the bound certificate")
    p_bound.add_argument("problem")
    p_bound.add_argument("--alpha-step", dest="alpha_step", type=float)
    p_bound.add_argument("--xi")
    p_bound.add_argument("--step", type=float, help="staircase sampling step")
    p_bound.add_argument("--t-end", dest="t_end", type=float)
    p_bound.add_argument("--out", default=".", help="output directory")
    p_bound.set_defaults(func=cmd_bound)

    p_sim = sub.add_parser("simulate", help="simulate a disturbance scenario")
    p_sim.add_argument("problem")
    p_sim.add_argument("--a", type=float, default=1.0, help="scale on the omega signal")
    p_sim.add_argument("--b", type=float, default=1.0, help="scale on the d signal")
    p_sim.add_argument("--step", type=float)
    p_sim.add_argument("--t-end", dest="t_end", type=float)
    p_sim.add_argument("--out", default="trajectory.csv")
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="simulate and check domination by the bound")
    p_ver.add_argument("problem")
    p_ver.add_argument("--a", type=float, default=None,
                       help="single omega scale (default: preset grid)")
    p_ver.add_argument("--b", type=float, default=None,
                       help="single d scale (default: preset grid)")
    p_ver.add_argument("--alpha-step", dest="alpha_step", type=float)
    p_ver.add_argument("--xi")
    p_ver.add_argument("--step", type=float)
    p_ver.add_argument("--t-end", dest="t_end", type=float)
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProblemFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except InvalidScenario as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
