"""Command line front end: fit, evaluate, demos, and model inspection.

Exit codes: 0 on success, 1 on any usage, I/O, or numeric error, 2 when a
fit ran out of iterations without converging (the artifact is still
written, and the report says why).

Structured outputs are JSON, time series are CSV.  Every output file
records the tool version and the content hashes of its inputs, so a
metric file can always be traced back to the exact model and
coefficients that produced it.  Timing lives only in fit reports;
coefficient artifacts are byte-identical across reruns with the same
inputs and seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .basis import basis_size
from .centroidal import centroidal_matrices, local_connection
from .errors import ContractViolationError, ToolkitError, TrajectoryError
from .fit import FitSettings, fit_wbo
from .model import Configuration, content_hash, load_model
from .parallel import resolve_threads
from .planar import (
    BarFlywheelParams,
    closed_form_cycle_rotation,
    exact_psi_rel,
    fit_planar_psi,
    psi_fit_residual,
    reconstruct_bar_angle,
    reorientation_cycle,
    sinusoid_trajectory,
    wbo_drift,
)
from .spatial import Pose
from .wbo import load_wbo, omega_wbo, save_wbo

__all__ = ["EvalReport", "main", "console_main"]


@dataclass(frozen=True)
class EvalReport:
    """Per-axis mean absolute errors of the fitted surrogate on a trajectory."""

    velocity_mae: tuple  # |A qdot - A~ qdot| per axis, rad/s
    cam_mae: tuple  # |H - H~| per axis, kg m^2/s
    samples: int
    span: tuple

    def to_dict(self):
        out = asdict(self)
        out["velocity_mae"] = [float(v) for v in self.velocity_mae]
        out["cam_mae"] = [float(v) for v in self.cam_mae]
        out["span"] = [float(t) for t in self.span]
        return out


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; 2 is taken, remap to 1."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _file_sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return "sha256:" + digest.hexdigest()


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(payload, indent=2, sort_keys=True))
        handle.write("\n")


def _write_csv(path, preamble, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in preamble:
            handle.write(f"# {line}\n")
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" for v in row])


def _read_trajectory_csv(path, n_q):
    """Rows of t, q (n_q columns), qdot (n_q columns); '#' lines ignored.

    One optional non-numeric header row is allowed before the data.
    """
    expected = 1 + 2 * n_q
    rows = []
    header_seen = False
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split(",")
            try:
                values = [float(p) for p in parts]
            except ValueError:
                if rows or header_seen:
                    raise TrajectoryError(
                        f"{path}:{lineno}: non-numeric row in the data section"
                    ) from None
                header_seen = True
                continue
            if len(values) != expected:
                raise TrajectoryError(
                    f"{path}:{lineno}: expected {expected} columns "
                    f"(t, {n_q} positions, {n_q} velocities), got {len(values)}"
                )
            rows.append(values)
    if not rows:
        raise TrajectoryError(f"{path}: no data rows")
    data = np.array(rows)
    return data[:, 0], data[:, 1 : 1 + n_q], data[:, 1 + n_q :]


def _planar_params(args, slotted):
    return BarFlywheelParams(
        inertia_bar=args.inertia_bar,
        inertia_flywheel=args.inertia_flywheel,
        mass_bar=args.mass_bar,
        mass_flywheel=args.mass_flywheel,
        bar_length=args.bar_length,
        slotted=slotted,
    )


def _planar_trace_rows(params, trajectory, psi, step):
    """Columns t, theta, d, phi, psi_wbo, cam along a zero-momentum motion."""
    times, theta = reconstruct_bar_angle(params, trajectory, step=step)
    d = np.asarray(trajectory.d(times), dtype=float)
    phi = np.asarray(trajectory.phi(times), dtype=float)
    phi_dot = np.asarray(trajectory.phi_dot(times), dtype=float)
    locked = params.inertia_bar + params.inertia_flywheel
    if params.slotted:
        locked = locked + params.reduced_mass * d * d
    theta_dot = -params.inertia_flywheel * phi_dot / locked
    cam = locked * theta_dot + params.inertia_flywheel * phi_dot
    psi_wbo = theta + (psi.value(d, phi) if psi is not None else 0.0)
    return np.column_stack([times, theta, d, phi, psi_wbo, cam])


def _demo_preamble(params, what):
    return [
        f"wbokit {__version__}",
        what,
        f"I_B={params.inertia_bar} I_F={params.inertia_flywheel} "
        f"m_B={params.mass_bar} m_F={params.mass_flywheel} "
        f"l={params.bar_length} slotted={params.slotted}",
    ]


_TRACE_HEADER = ["t", "theta", "d", "phi", "psi_wbo", "cam"]


def cmd_fit(args):
    model = load_model(args.model)
    settings = FitSettings(
        n_samples=args.samples,
        seed=args.seed,
        mirror=args.mirror,
        degree=args.degree,
        ridge=args.ridge,
        max_iters=args.max_iters,
        prune_threshold=args.prune,
    )
    wbo, report = fit_wbo(model, settings, threads=resolve_threads(args.threads))
    save_wbo(wbo, args.out)
    _write_json(
        args.report,
        {
            "tool_version": __version__,
            "model_hash": content_hash(model),
            "model_file_sha256": _file_sha256(args.model),
            "settings": asdict(settings),
            "artifact": args.out,
            **report.to_dict(),
        },
    )
    status = "converged" if report.converged else "DID NOT CONVERGE"
    print(
        f"fit {status}: {report.iterations} iterations, "
        f"N={report.n_samples}, cost {report.cost_trace[0]:.6e} -> "
        f"{report.cost_trace[-1]:.6e}, terms {report.n_terms_before} -> "
        f"{report.n_terms_after} after pruning"
    )
    print(f"wrote {args.out} and {args.report}")
    if not report.converged:
        print(f"reason: {report.reason}", file=sys.stderr)
        return 2
    return 0


def cmd_eval(args):
    model = load_model(args.model)
    wbo = load_wbo(args.theta)
    if wbo.basis.n_q != model.n_q:
        raise ContractViolationError(
            f"coefficients expect n_q={wbo.basis.n_q}, model has n_q={model.n_q}"
        )
    stored = wbo.metadata.get("model_hash")
    actual = content_hash(model)
    if stored is not None and stored != actual:
        print(
            "warning: coefficient artifact was fitted to a different model "
            f"(stored {stored}, this model {actual})",
            file=sys.stderr,
        )

    times, positions, velocities = _read_trajectory_csv(args.trajectory, model.n_q)
    rows = []
    vel_err = []
    cam_err = []
    for t, q, qd in zip(times, positions, velocities):
        cfg = Configuration(Pose.identity(), q)
        mats = centroidal_matrices(model, cfg)
        exact_vel = local_connection(model, cfg).connection @ qd
        approx_vel = omega_wbo(wbo, q, qd)
        cam = mats.coupling @ qd  # base at rest; the comparison is
        cam_approx = mats.locked_inertia @ approx_vel  # independent of omega_B
        rows.append(np.concatenate([[t], exact_vel, approx_vel, cam, cam_approx]))
        vel_err.append(np.abs(exact_vel - approx_vel))
        cam_err.append(np.abs(cam - cam_approx))

    report = EvalReport(
        velocity_mae=tuple(np.mean(vel_err, axis=0)),
        cam_mae=tuple(np.mean(cam_err, axis=0)),
        samples=len(rows),
        span=(float(times[0]), float(times[-1])),
    )
    preamble = [
        f"wbokit {__version__}",
        f"model {actual}",
        f"theta {_file_sha256(args.theta)}",
    ]
    header = (
        ["t"]
        + [f"vel_exact_{a}" for a in "xyz"]
        + [f"vel_approx_{a}" for a in "xyz"]
        + [f"cam_exact_{a}" for a in "xyz"]
        + [f"cam_approx_{a}" for a in "xyz"]
    )
    _write_csv(args.out, preamble, header, rows)
    _write_json(
        args.report,
        {
            "tool_version": __version__,
            "model_hash": actual,
            "theta_file_sha256": _file_sha256(args.theta),
            "trajectory_file_sha256": _file_sha256(args.trajectory),
            **report.to_dict(),
        },
    )
    print(
        f"evaluated {report.samples} states: velocity MAE "
        f"[{', '.join(f'{v:.3e}' for v in report.velocity_mae)}] rad/s, "
        f"CAM MAE [{', '.join(f'{v:.3e}' for v in report.cam_mae)}]"
    )
    print(f"wrote {args.out} and {args.report}")
    return 0


def cmd_demo_holonomy(args):
    params = _planar_params(args, slotted=True)
    cycle = reorientation_cycle(params, segment_time=args.segment_time)
    rows = _planar_trace_rows(params, cycle, None, args.step)
    _write_csv(
        args.out,
        _demo_preamble(params, "slotted reorientation cycle, psi = 0"),
        _TRACE_HEADER,
        rows,
    )
    integrated = rows[-1, 1] - rows[0, 1]
    closed = closed_form_cycle_rotation(params)
    print(f"net bar rotation over the cycle: {integrated:.9f} rad")
    print(f"closed-form holonomy:           {closed:.9f} rad")
    print(f"difference: {abs(integrated - closed):.3e} rad")
    print(f"wrote {args.out}")
    return 0


def cmd_demo_conservation(args):
    params = _planar_params(args, slotted=False)
    ratio = exact_psi_rel(params, 1.0)
    traj = sinusoid_trajectory(
        params, span=(0.0, args.duration), phi_amp=args.amplitude,
        phi_freq=args.frequency,
    )
    rows = _planar_trace_rows(
        params, traj, _ExactPsi(ratio), args.step
    )
    _write_csv(
        args.out,
        _demo_preamble(params, "pinned flywheel, conserved whole-body angle"),
        _TRACE_HEADER,
        rows,
    )
    drift = np.max(np.abs(rows[:, 4] - rows[0, 4]))
    print(f"whole-body angle drift over {args.duration} s: {drift:.3e} rad")
    print("(exactly integrable: any drift is integrator round-off)")
    print(f"wrote {args.out}")
    return 0


class _ExactPsi:
    """Adapter giving the exact pinned-case psi the fitted-psi interface."""

    def __init__(self, ratio):
        self.ratio = ratio

    def value(self, d, phi):
        return self.ratio * np.asarray(phi, dtype=float)


def cmd_demo_planar_fit(args):
    params = _planar_params(args, slotted=True)
    psi = fit_planar_psi(params)
    zero_residual = psi_fit_residual(params, _ZeroPsi())
    fit_residual = psi_fit_residual(params, psi)
    print("fitted psi(d, phi) coefficients:")
    for (a, b), c in zip(psi.terms, psi.coefficients):
        print(f"  d^{a} phi^{b}: {c: .9e}")
    print(f"gradient residual: {fit_residual:.6e} (zero function: {zero_residual:.6e})")

    cycle = reorientation_cycle(params, segment_time=args.segment_time)
    rows = _planar_trace_rows(params, cycle, psi, args.step)
    _write_csv(
        args.out,
        _demo_preamble(params, "slotted reorientation cycle, fitted psi"),
        _TRACE_HEADER,
        rows,
    )
    fitted = wbo_drift(params, psi, cycle, step=args.step)
    bare = wbo_drift(params, None, cycle, step=args.step)
    print(
        f"whole-body angle wander along the cycle: max {fitted.max_abs:.6f} rad "
        f"with fitted psi vs {bare.max_abs:.6f} rad with psi = 0"
    )
    print(
        f"net drift after the closed cycle: {fitted.final_abs:.6f} rad either "
        "way (holonomy; no configuration function can remove it)"
    )
    print(f"wrote {args.out}")
    return 0


class _ZeroPsi:
    def value(self, d, phi):
        return np.zeros(np.broadcast(np.asarray(d), np.asarray(phi)).shape)

    def gradient(self, d, phi):
        shape = np.broadcast(np.asarray(d), np.asarray(phi)).shape
        return np.zeros(shape), np.zeros(shape)


def cmd_basis_count(args):
    if args.dof < 1 or args.degree < 1:
        raise ContractViolationError("dof and degree must be >= 1")
    print(basis_size(args.dof, args.degree))
    return 0


def cmd_model_check(args):
    model = load_model(args.model)
    fixed = sum(1 for j in model.topological_joints if j.kind == "fixed")
    print(f"model ok: {args.model}")
    print(f"  links: {len(model.links)}")
    print(f"  joints: {len(model.topological_joints)} ({fixed} fixed)")
    print(f"  coordinates: {model.n_q}")
    print(f"  mirror table: {'yes' if model.mirror is not None else 'no'}")
    print(f"  content hash: {content_hash(model)}")
    return 0


def _add_planar_args(parser):
    parser.add_argument("--inertia-bar", type=float, default=2.0)
    parser.add_argument("--inertia-flywheel", type=float, default=1.0)
    parser.add_argument("--mass-bar", type=float, default=4.0)
    parser.add_argument("--mass-flywheel", type=float, default=1.0)
    parser.add_argument("--bar-length", type=float, default=1.0)
    parser.add_argument("--step", type=float, default=1e-3,
                        help="integration step, s")


def build_parser():
    parser = _Parser(prog="wbokit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="fit WBO coefficients to a model")
    fit.add_argument("--model", required=True)
    fit.add_argument("--samples", type=int, default=500)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--mirror", action="store_true",
                     help="augment samples with their sagittal reflections")
    fit.add_argument("--degree", type=int, default=3)
    fit.add_argument("--ridge", type=float, default=1e-12,
                     help="per-sample Tikhonov weight")
    fit.add_argument("--max-iters", type=int, default=50)
    fit.add_argument("--prune", type=float, default=1e-8,
                     help="zero coefficients smaller than this after the fit")
    fit.add_argument("--threads", type=int, default=None)
    fit.add_argument("--out", default="theta.json")
    fit.add_argument("--report", default="report.json")
    fit.set_defaults(func=cmd_fit)

    ev = sub.add_parser("eval", help="compare fitted vs exact along a trajectory")
    ev.add_argument("--model", required=True)
    ev.add_argument("--theta", required=True)
    ev.add_argument("--trajectory", required=True,
                    help="CSV rows: t, positions..., velocities...")
    ev.add_argument("--out", default="eval.csv")
    ev.add_argument("--report", default="eval.json")
    ev.set_defaults(func=cmd_eval)

    demo = sub.add_parser("demo", help="planar reference-model demonstrations")
    demo_sub = demo.add_subparsers(dest="demo_command", required=True,
                                   parser_class=_Parser)

    hol = demo_sub.add_parser("holonomy",
                              help="closed joint-space loop rotates the bar")
    _add_planar_args(hol)
    hol.add_argument("--segment-time", type=float, default=1.0)
    hol.add_argument("--out", default="demo-holonomy.csv")
    hol.set_defaults(func=cmd_demo_holonomy)

    con = demo_sub.add_parser("conservation",
                              help="pinned case conserves the whole-body angle")
    _add_planar_args(con)
    con.add_argument("--duration", type=float, default=4.0)
    con.add_argument("--amplitude", type=float, default=1.0, help="rad")
    con.add_argument("--frequency", type=float, default=0.5, help="Hz")
    con.add_argument("--out", default="demo-conservation.csv")
    con.set_defaults(func=cmd_demo_conservation)

    pfit = demo_sub.add_parser("planar-fit",
                               help="fit psi(d, phi) on the slotted model")
    _add_planar_args(pfit)
    pfit.add_argument("--segment-time", type=float, default=1.0)
    pfit.add_argument("--out", default="demo-planar-fit.csv")
    pfit.set_defaults(func=cmd_demo_planar_fit)

    count = sub.add_parser("basis-count", help="number of basis terms")
    count.add_argument("dof", type=int)
    count.add_argument("degree", type=int)
    count.set_defaults(func=cmd_basis_count)

    check = sub.add_parser("model-check", help="parse and validate a model file")
    check.add_argument("model")
    check.set_defaults(func=cmd_model_check)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main():
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
