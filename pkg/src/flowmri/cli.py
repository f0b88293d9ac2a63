"""Command-line interface: simulate, mask, reconstruct, eval, render, pipeline.

A config file (plain ``key = value`` lines, ``#`` comments) can preload any
flag's default; explicit flags win. Exit codes: 0 success, 2 usage error,
3 file format error, 4 solver divergence, 1 anything else.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as fio
from . import metrics, render
from .fourier import MASK_KINDS, make_mask
from .joint import JointDivergenceError, JointParams, run_joint
from .pdhg import DivergenceError, PdhgConfig, PdhgConfigError
from .phantom import PhantomSpec, generate_sequence
from .sequential import run_sequential, run_zero_fill

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_DIVERGENCE = 4


def _parse_dims(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"dims must look like 64x64, got {text!r}") from exc


def load_config_file(path: str) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = val
    return values


def _add_phantom_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dims", type=_parse_dims, default=(64, 64))
    p.add_argument("--radius", type=float, default=10.0)
    p.add_argument("--center", type=str, default=None, help="x,z sphere center in pixels")
    p.add_argument("--rise-speed", type=float, default=1.0)
    p.add_argument("--c-fluid", type=float, default=1.0)
    p.add_argument("--c-bubble", type=float, default=0.2)
    p.add_argument("--background-amplitude", type=float, default=0.6)
    p.add_argument("--zeta", type=float, default=0.5)


def _add_mask_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=MASK_KINDS, default="center-weighted")
    p.add_argument("--fraction", type=float, default=0.11)
    p.add_argument("--center-radius", type=int, default=4)


def _add_joint_args(p: argparse.ArgumentParser) -> None:
    defaults = JointParams()
    p.add_argument("--alpha", type=float, default=defaults.alpha)
    p.add_argument("--beta", type=float, default=defaults.beta)
    p.add_argument("--delta", type=float, default=defaults.delta)
    p.add_argument("--eta", type=float, default=defaults.eta)
    p.add_argument("--tau", type=float, default=defaults.tau)
    p.add_argument("--c1", type=float, default=defaults.c1)
    p.add_argument("--c2", type=float, default=defaults.c2)
    p.add_argument("--c-update", action="store_true")
    p.add_argument("--outer-max", type=int, default=defaults.outer_max)
    # discrepancy factor calibrated on the bundled phantom configuration
    p.add_argument("--nu", type=float, default=1.9)
    p.add_argument("--stop-rule", choices=["fixed_iters", "discrepancy"], default=defaults.stop_rule)
    p.add_argument("--inner-iters", type=int, default=defaults.inner.max_iters)
    p.add_argument("--inner-tol", type=float, default=defaults.inner.rel_tol)


def joint_params_from_args(args) -> JointParams:
    return JointParams(
        alpha=args.alpha,
        beta=args.beta,
        delta=args.delta,
        eta=args.eta,
        tau=args.tau,
        c1=args.c1,
        c2=args.c2,
        c_update=args.c_update,
        outer_max=args.outer_max,
        nu=args.nu,
        stop_rule=args.stop_rule,
        inner=PdhgConfig(max_iters=args.inner_iters, rel_tol=args.inner_tol),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowmri")
    parser.add_argument("--config", type=str, default=None, help="key = value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mask", help="generate and save a sampling mask")
    _add_mask_args(p)
    p.add_argument("--dims", type=_parse_dims, default=(64, 64))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="synthesize phantom k-space datasets")
    _add_phantom_args(p)
    _add_mask_args(p)
    p.add_argument("--mask-file", type=str, default=None, help="reuse an existing mask file")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--frame-displacement", type=str, default="0,2")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("reconstruct", help="reconstruct a dataset file")
    p.add_argument("--method", choices=["zerofill", "sequential", "joint"], required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seq-alpha", type=float, default=0.03)
    p.add_argument("--history", type=str, default=None, help="CSV of per-iteration diagnostics")
    _add_joint_args(p)

    p = sub.add_parser("eval", help="score reconstructions against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--recon-dir", required=True)
    p.add_argument("--methods", nargs="+", required=True)
    p.add_argument("--component", default="x")
    p.add_argument("--out-csv", type=str, default=None)

    p = sub.add_parser("render", help="render a field file to PNG/SVG")
    p.add_argument("--field", required=True)
    p.add_argument("--field-y", default=None, help="second component for quiver")
    p.add_argument("--style", choices=sorted(render.STYLE_KINDS), required=True)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pipeline", help="simulate, reconstruct (all methods), evaluate")
    _add_phantom_args(p)
    _add_mask_args(p)
    p.add_argument("--sigma", type=float, default=0.065)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--seq-alpha", type=float, default=0.03)
    p.add_argument("--component", default="x")
    p.add_argument("--out-dir", required=True)
    _add_joint_args(p)

    return parser


def _field_path(out_dir: Path, method: str, component: str, name: str) -> Path:
    return out_dir / f"{method}_{component}_{name}.vmri"


def _save_result(out_dir: Path, method: str, component: str, magnitudes, phases, velocity, labels=None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for j in range(4):
        fio.save_field(_field_path(out_dir, method, component, f"magnitude{j + 1}"), magnitudes[j], "magnitude")
        fio.save_field(_field_path(out_dir, method, component, f"phase{j + 1}"), phases[j], "phase", units="rad")
    fio.save_field(_field_path(out_dir, method, component, "velocity"), velocity, "velocity")
    if labels is not None:
        for j in range(4):
            fio.save_field(
                _field_path(out_dir, method, component, f"labels{j + 1}"),
                np.asarray(labels[j], dtype=float),
                "label",
            )


def cmd_mask(args) -> int:
    mask = make_mask(args.kind, args.fraction, args.seed, args.dims, args.center_radius)
    fio.save_mask(args.out, mask)
    print(f"wrote {args.out}: {mask.num_samples}/{mask.selected.size} samples")
    return EXIT_OK


def _phantom_spec(args, frames: int = 1) -> PhantomSpec:
    if args.center is None:
        center = (args.dims[0] / 2.0, args.dims[1] / 2.0)
    else:
        cx, cz = args.center.split(",")
        center = (float(cx), float(cz))
    disp = (0.0, 0.0)
    if getattr(args, "frame_displacement", None):
        dx, dz = args.frame_displacement.split(",")
        disp = (float(dx), float(dz))
    return PhantomSpec(
        shape=args.dims,
        center=center,
        radius=args.radius,
        rise_speed=args.rise_speed,
        c_fluid=args.c_fluid,
        c_bubble=args.c_bubble,
        background_amplitude=args.background_amplitude,
        zeta=args.zeta,
        frames=frames,
        frame_displacement=disp,
    )


def cmd_simulate(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = _phantom_spec(args, frames=args.frames)
    if args.mask_file:
        mask = fio.load_mask(args.mask_file)
        mask_name = Path(args.mask_file).name
        if not (out_dir / mask_name).exists():
            fio.save_mask(out_dir / mask_name, mask)
    else:
        mask = make_mask(args.kind, args.fraction, args.seed, spec.shape, args.center_radius)
        mask_name = "mask.vmri"
        fio.save_mask(out_dir / mask_name, mask)
    frames = generate_sequence(spec, mask, args.sigma, args.seed)
    for k, (sets, truth) in enumerate(frames):
        for comp, data in sets.items():
            fio.save_dataset(
                out_dir / f"dataset_{comp}_f{k}.vmri", data, mask_name, seed=args.seed, frame=k
            )
        fio.save_truth(out_dir / f"truth_f{k}.vmri", truth)
    print(f"wrote {len(frames)} frame(s) to {out_dir}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    data = fio.load_dataset(args.data)
    comp = data.component or "x"
    out_dir = Path(args.out_dir)
    if args.method == "zerofill":
        res = run_zero_fill(data)
        _save_result(out_dir, "zerofill", comp, res.magnitudes, res.phases, res.velocity)
    elif args.method == "sequential":
        res = run_sequential(data, alpha=args.seq_alpha)
        _save_result(out_dir, "sequential", comp, res.magnitudes, res.phases, res.velocity)
    else:
        params = joint_params_from_args(args)
        state, velocity, labels, history = run_joint(data, params)
        _save_result(out_dir, "joint", comp, state.u, state.phi, velocity, labels)
        if args.history:
            with open(args.history, "w") as fh:
                fh.write("iter,energy,residual\n")
                for i, (e, r) in enumerate(zip(history.energy, history.residual)):
                    fh.write(f"{i},{e:.12e},{r:.12e}\n")
    print(f"wrote {args.method} reconstruction for component {comp} to {out_dir}")
    return EXIT_OK


def _evaluate_dir(out_dir: Path, method: str, component: str, truth) -> metrics.EvalReport:
    magnitudes = [fio.load_field(_field_path(out_dir, method, component, f"magnitude{j + 1}"))[0] for j in range(4)]
    phases = [fio.load_field(_field_path(out_dir, method, component, f"phase{j + 1}"))[0] for j in range(4)]
    velocity = fio.load_field(_field_path(out_dir, method, component, "velocity"))[0]
    labels_path = _field_path(out_dir, method, component, "labels1")
    # stored labels mark the fluid region; evaluation wants the bubble mask
    labels = fio.load_field(labels_path)[0] < 0.5 if labels_path.exists() else None
    return metrics.evaluate(
        method,
        magnitudes,
        phases,
        velocity,
        truth.magnitude,
        truth.phases[component],
        truth.velocity[component],
        truth.labels,
        labels=labels,
    )


def cmd_eval(args) -> int:
    truth = fio.load_truth(args.truth)
    reports = [
        _evaluate_dir(Path(args.recon_dir), m, args.component, truth) for m in args.methods
    ]
    print(metrics.compare_methods(reports))
    if args.out_csv:
        Path(args.out_csv).write_text(metrics.reports_to_csv(reports))
    return EXIT_OK


def cmd_render(args) -> int:
    values, header = fio.load_field(args.field)
    values_y = None
    if args.field_y:
        values_y, _ = fio.load_field(args.field_y)
    render.render(values, header["kind"], args.style, args.out, values_y=values_y, stride=args.stride)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    out_dir = Path(args.out_dir)
    args.mask_file = None
    args.frames = 1
    args.frame_displacement = "0,0"
    cmd_simulate(args)
    comp = args.component
    data = fio.load_dataset(out_dir / f"dataset_{comp}_f0.vmri")
    truth = fio.load_truth(out_dir / "truth_f0.vmri")

    res_zf = run_zero_fill(data)
    _save_result(out_dir, "zerofill", comp, res_zf.magnitudes, res_zf.phases, res_zf.velocity)
    res_seq = run_sequential(data, alpha=args.seq_alpha)
    _save_result(out_dir, "sequential", comp, res_seq.magnitudes, res_seq.phases, res_seq.velocity)
    params = joint_params_from_args(args)
    state, velocity, labels, history = run_joint(data, params)
    _save_result(out_dir, "joint", comp, state.u, state.phi, velocity, labels)
    with open(out_dir / "joint_history.csv", "w") as fh:
        fh.write("iter,energy,residual\n")
        for i, (e, r) in enumerate(zip(history.energy, history.residual)):
            fh.write(f"{i},{e:.12e},{r:.12e}\n")

    reports = [
        _evaluate_dir(out_dir, m, comp, truth) for m in ("zerofill", "sequential", "joint")
    ]
    table = metrics.compare_methods(reports)
    print(table)
    (out_dir / "report.txt").write_text(table + "\n")
    (out_dir / "report.csv").write_text(metrics.reports_to_csv(reports))
    return EXIT_OK


COMMANDS = {
    "mask": cmd_mask,
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "eval": cmd_eval,
    "render": cmd_render,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # config file values become defaults; explicit flags still win
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            cfg = load_config_file(argv[idx + 1])
        except (OSError, ValueError, IndexError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_USAGE
        for action in parser._subparsers._group_actions[0].choices.values():  # noqa: SLF001
            known = {a.dest for a in action._actions}  # noqa: SLF001
            action.set_defaults(**{k: _coerce(v) for k, v in cfg.items() if k in known})
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except fio.FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (DivergenceError, JointDivergenceError, PdhgConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _coerce(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if "x" in text and all(part.isdigit() for part in text.lower().split("x")):
        return _parse_dims(text)
    return text


if __name__ == "__main__":
    sys.exit(main())
