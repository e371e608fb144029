"""Command-line front end.

Every command writes one output file plus ``<output>.manifest.json``;
``replay`` re-runs a manifest and can check the output bytes against it.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, bounds, diffusion, normal, vnc, walk
from .channel import analyze, load_channel
from .controllers import controller_from_dict, s_of_eps
from .errors import DispersionLabError, NoConvergence

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

# options that do not affect output bytes and are left out of the manifest
_VOLATILE = {"out", "threads", "func", "command", "check"}


class InputError(Exception):
    pass


def _positive_zeta(text: str) -> float:
    z = float(text)
    if not z > 0 or not math.isfinite(z):
        raise argparse.ArgumentTypeError(f"zeta must lie in (0, inf), got {text}")
    return z


def _zeta_list(text: str) -> list[float]:
    return [_positive_zeta(t) for t in text.split(",") if t.strip()]


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _read_json_arg(text: str):
    """Inline JSON if it starts with ``{`` or ``[``, else a path to a JSON file."""
    try:
        if text.lstrip().startswith(("{", "[")):
            return json.loads(text)
        with open(text) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {text!r}: {exc}") from exc


def _load_analysis(path):
    try:
        return analyze(load_channel(path))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read channel file {path!r}: {exc}") from exc


# --------------------------------------------------------------------------
# commands; each returns (text, extra manifest fields)


def cmd_analyze(args):
    an = _load_analysis(args.channel)
    print(an.summary())
    for warning in an.to_dict()["warnings"]:
        print(f"warning: {warning}", file=sys.stderr)
    return json.dumps(an.to_dict(), indent=2) + "\n", {}


def _threshold(args, an, ctrl):
    if args.threshold_mode == "absolute":
        if args.threshold is None:
            raise InputError("--threshold-mode absolute needs --threshold")
        return args.threshold
    eps = args.eps if args.eps is not None else getattr(ctrl, "eps", None)
    if eps is None:
        raise InputError("--threshold-mode alpha-eps needs --eps")
    alpha = args.alpha if args.alpha is not None else getattr(ctrl, "alpha", None)
    if alpha is None:
        alpha = bounds.find_alpha(eps, an.beta)
    return args.n * an.capacity_nats + math.sqrt(args.n * an.v_min) * normal.ppf(alpha * eps)


def cmd_simulate(args):
    if args.trials < 1:
        raise InputError("--trials must be >= 1")
    an = _load_analysis(args.channel)
    spec = _read_json_arg(args.controller)
    if not isinstance(spec, dict):
        raise InputError("controller JSON must be an object")
    ctrl = controller_from_dict(spec, an, args.n)
    thr = _threshold(args, an, ctrl)
    res = walk.simulate_gamma_n(an, walk.SimConfig(args.n, args.trials, args.seed, ctrl, thr), args.threads)
    return walk.WalkResult.CSV_HEADER + "\n" + res.csv_row() + "\n", {"seed": args.seed}


def cmd_curve(args):
    an = _load_analysis(args.channel)
    curve = bounds.build_rate_curve(an, bounds.parse_eps_grid(args.eps_grid))
    return curve.to_csv(), {}


def cmd_vnc(args):
    try:
        gamma = vnc.load_gamma(args.gamma)
        lam = vnc.load_lambda(args.lam)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from exc
    if args.center:
        lam = vnc.center_lambda(gamma, lam)
    rows = vnc.scaling_report(gamma, lam, args.zetas)
    return vnc.report_csv(rows), {}


def cmd_coin(args):
    header = walk.WalkResult.CSV_HEADER
    lines = [header]
    for strategy in args.strategies.split(","):
        res = walk.coin_game(args.w0, args.n, strategy.strip(), args.trials, args.seed, args.threads)
        lines.append(res.csv_row())
    return "\n".join(lines) + "\n", {"seed": args.seed}


def cmd_chain(args):
    lines = ["delta,estimate,ci_radius,trials,seed,n"]
    for delta in args.deltas:
        spec = walk.two_point_spec(args.beta, delta, args.eps, args.n)
        res = walk.simulate_abstract_chain(spec, args.trials, args.seed, args.threads)
        lines.append(f"{delta:.12g},{res.estimate:.12g},{res.ci_radius:.12g},{res.trials},{res.seed},{res.n}")
    return "\n".join(lines) + "\n", {"seed": args.seed}


def cmd_sde(args):
    lines = ["sigma_lower,sigma_upper,width,x0,steps,trials,seed,estimate,ci_radius,closed_form"]
    if args.kind == "ramp":
        sig = diffusion.SigmaField.ramp(args.beta, args.delta)
        x0 = s_of_eps(args.eps, args.beta)
        closed = diffusion.prob_nonpositive_at_1(diffusion.BangBangDiffusion(args.beta, x0))
        nonneg = False
    else:
        sig = diffusion.SigmaField.bang_bang(math.sqrt(args.nu_max), math.sqrt(args.nu_min))
        x0 = -args.offset
        closed = diffusion.mcnamara_opt_prob(args.nu_min, args.nu_max, args.offset)
        nonneg = True
    cfg = diffusion.SdeConfig(sig, x0, args.steps, args.trials, args.seed)
    p, ci = diffusion.empirical_prob(diffusion.euler_maruyama(cfg, args.threads), nonneg)
    vals = (sig.lower, sig.upper, sig.width, x0)
    lines.append(",".join(f"{v:.12g}" for v in vals)
                 + f",{args.steps},{args.trials},{args.seed},{p:.12g},{ci:.12g},{closed:.12g}")
    return "\n".join(lines) + "\n", {"seed": args.seed}


def cmd_density(args):
    d = diffusion.BangBangDiffusion(args.beta)
    xs = np.linspace(args.lo, args.hi, args.points)
    return diffusion.density_grid_csv(d, args.t, xs, xs), {}


# --------------------------------------------------------------------------
# parser


def _float_list(text):
    return [float(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dispersion-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_, ext="csv", sim=False):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("-o", "--out", default=f"{name}.{ext}", help="output file (default: %(default)s)")
        if sim:
            p.add_argument("--seed", type=int, required=True)
            p.add_argument("--trials", type=_nonneg_int, default=100_000)
            p.add_argument("--threads", type=int, default=None,
                           help=f"worker threads (default: ${walk.THREADS_ENV} or CPU count)")
        return p

    p = add("analyze", cmd_analyze, "capacity, dispersion extremes and class of a channel", "json")
    p.add_argument("channel")

    p = add("simulate", cmd_simulate, "tail probability of the information-density sum", sim=True)
    p.add_argument("channel")
    p.add_argument("--controller", required=True, help="controller JSON (inline or file)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--threshold-mode", choices=("alpha-eps", "absolute"), default="alpha-eps")
    p.add_argument("--eps", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--threshold", type=float, help="absolute threshold in nats")

    p = add("curve", cmd_curve, "second-order rate curves with and without feedback")
    p.add_argument("channel")
    p.add_argument("--eps-grid", default="0.01:0.01:0.99", help="a:step:b or comma list")

    p = add("vnc", cmd_vnc, "zeta-scaling report for a very noisy channel family")
    p.add_argument("gamma")
    p.add_argument("lam", metavar="lambda")
    p.add_argument("--zetas", type=_zeta_list, default=[0.2, 0.1, 0.05, 0.025])
    p.add_argument("--center", action="store_true", help="center lambda rows before use")

    p = add("coin", cmd_coin, "two-coin betting game", sim=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--w0", type=float, default=1.0)
    p.add_argument("--strategies", default="timid,bold,half-switch")

    p = add("chain", cmd_chain, "abstract two-law chain, optionally over several band widths", sim=True)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--deltas", type=_float_list, default=[0.2, 0.1, 0.05, 0.02])

    p = add("sde", cmd_sde, "Euler-Maruyama estimate next to its closed form", sim=True)
    p.add_argument("kind", choices=("ramp", "bang-bang"))
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--nu-min", type=float, default=0.102)
    p.add_argument("--nu-max", type=float, default=0.692)
    p.add_argument("--offset", type=float, default=0.0, help="r - kappa; the SDE starts at -offset")

    p = add("density", cmd_density, "transition density grid of the bang-bang diffusion")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--lo", type=float, default=-3.0)
    p.add_argument("--hi", type=float, default=3.0)
    p.add_argument("--points", type=int, default=25)

    p = sub.add_parser("replay", help="re-run a manifest")
    p.add_argument("manifest")
    p.add_argument("-o", "--out", default=None, help="output file (default: the recorded one)")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--check", action="store_true", help="fail unless output bytes match the manifest")
    return ap


_FILE_ARGS = {"channel", "gamma", "lam"}


def _normalized_argv(args) -> list[str]:
    """Reconstruct an argv that reproduces ``args`` (file paths made absolute)."""
    argv = [args.command]
    params = {k: v for k, v in vars(args).items() if k not in _VOLATILE}
    for key in sorted(_FILE_ARGS & params.keys()):
        argv.append(os.path.abspath(params.pop(key)))
    ctrl = params.get("controller")
    if ctrl is not None and not ctrl.lstrip().startswith(("{", "[")):
        params["controller"] = os.path.abspath(ctrl)
    if args.command == "sde":
        argv.append(params.pop("kind"))
    for key, val in sorted(params.items()):
        if val is None or val is False:
            continue
        flag = "--" + key.replace("_", "-")
        if val is True:
            argv.append(flag)
        elif isinstance(val, list):
            argv += [flag, ",".join(repr(float(v)) for v in val)]
        elif isinstance(val, float):
            argv += [flag, repr(val)]
        else:
            argv += [flag, str(val)]
    return argv


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _run(args, argv_record) -> int:
    t0 = time.perf_counter()
    text, extra = args.func(args)
    data = text.encode()
    with open(args.out, "wb") as fh:
        fh.write(data)
    manifest = {
        "command": args.command,
        "argv": argv_record,
        "parameters": {k: v for k, v in vars(args).items() if k not in _VOLATILE},
        "seed": extra.get("seed"),
        "version": __version__,
        "duration_s": round(time.perf_counter() - t0, 3),
        "outputs": [{"path": os.path.abspath(args.out), "sha256": _sha256(data)}],
    }
    with open(args.out + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=float)
        fh.write("\n")
    print(f"wrote {args.out} in {manifest['duration_s']:.2f} s", file=sys.stderr)
    return EXIT_OK


def _replay(args, parser) -> int:
    try:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
        argv = list(manifest["argv"])
        recorded = manifest["outputs"][0]
    except (OSError, json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
        raise InputError(f"bad manifest {args.manifest!r}: {exc}") from exc
    inner = parser.parse_args(argv)
    inner.out = args.out or recorded["path"]
    if hasattr(inner, "threads"):
        inner.threads = args.threads
    code = _run(inner, argv)
    if args.check:
        with open(inner.out, "rb") as fh:
            if _sha256(fh.read()) != recorded["sha256"]:
                print(f"error: {inner.out} differs from the recorded output", file=sys.stderr)
                return EXIT_INPUT
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if args.command == "replay":
            return _replay(args, parser)
        return _run(args, _normalized_argv(args))
    except NoConvergence as exc:
        print(f"error: no convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DispersionLabError, InputError, ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
