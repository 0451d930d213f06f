"""Command line interface.

Subcommands: ``run`` (experiment from a config file), ``oracle`` (the
validation battery), ``phantom`` (emit the test phantom), ``metrics``
(recompute metrics from stored artifacts), ``bench`` (compare kernel
backends).  Exit codes: 2 configuration, 3 model inconsistency,
4 numerical failure.
"""

import argparse
import importlib.resources
import os
import sys

import numpy as np

from . import __version__, backend
from .errors import (ConfigError, ModelInconsistencyError, NumericalError,
                     ParameterDomainError, PoisGibbsError)


def _add_global_flags(p):
    p.add_argument("--seed", type=int, default=None, help="override the seed")
    p.add_argument("--out", default=None, help="override the output directory")
    p.add_argument("--threads", type=int, default=None,
                   help="cap numba threads (chains themselves run sequentially)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="poisgibbs",
        description="Split Gibbs sampling for Bayesian Poisson inverse problems")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config", help="config file path or preset name")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
    _add_global_flags(p_run)

    p_orc = sub.add_parser("oracle", help="run the exact-augmentation battery")
    p_orc.add_argument("--cases", type=int, default=100)
    _add_global_flags(p_orc)

    p_ph = sub.add_parser("phantom", help="write the synthetic phantom")
    p_ph.add_argument("--size", type=int, default=128)
    _add_global_flags(p_ph)

    p_met = sub.add_parser("metrics", help="recompute metrics from run artifacts")
    p_met.add_argument("run_dir", help="directory written by `poisgibbs run`")
    _add_global_flags(p_met)

    p_bench = sub.add_parser("bench", help="compare numba and numpy backends")
    p_bench.add_argument("--size", type=int, default=32, help="image side length")
    p_bench.add_argument("--sweeps", type=int, default=200)
    p_bench.add_argument("--task", default="deblur", choices=("denoise", "deblur"))
    _add_global_flags(p_bench)
    return parser


def resolve_preset(name):
    """Config path for `name`: a file path as-is, else a shipped preset."""
    if os.path.exists(name):
        return name
    base = name if name.endswith(".cfg") else name + ".cfg"
    ref = importlib.resources.files("poisgibbs") / "presets" / base
    if ref.is_file():
        return str(ref)
    raise ConfigError(f"no such config file or preset: {name!r}")


def list_presets():
    root = importlib.resources.files("poisgibbs") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def _cmd_run(args):
    from .experiments import load_config, run_experiment
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.out is not None:
        overrides["out"] = args.out
    cfg = load_config(resolve_preset(args.config), overrides)
    doc = run_experiment(cfg)
    met = doc["metrics"]
    print(f"task={doc['task']} channels={doc['channels']} "
          f"psnr={met['psnr_mean_db']:.2f}dB ssim={met['ssim_mean']:.4f} "
          f"guard_rate={doc['guard_rate']:.3g}")
    print(f"artifacts in {cfg.out}")
    return 0


def _cmd_oracle(args):
    from .validation import run_enumeration_battery
    seed = 20240901 if args.seed is None else args.seed
    results = run_enumeration_battery(n_cases=args.cases, seed=seed)
    width = len(str(len(results)))
    fails = 0
    print(f"{'case':>{width}}  m  n  rel_err      status")
    for r in results:
        status = "pass" if r["ok"] else "FAIL"
        fails += not r["ok"]
        print(f"{r['case']:>{width}}  {r['m']}  {r['n']}  {r['rel_err']:.3e}  {status}")
    print(f"{len(results) - fails}/{len(results)} cases passed")
    return 0 if fails == 0 else 4


def _cmd_phantom(args):
    from .experiments import shepp_logan_phantom
    from .imagefiles import write_pixmap
    img = shepp_logan_phantom(args.size)
    out = args.out or f"phantom_{args.size}.pgm"
    write_pixmap(out, img.data[0])
    print(f"wrote {out}")
    return 0


def _cmd_metrics(args):
    from .diagnostics import psnr, ssim
    from .imagefiles import read_raw_image
    run_dir = args.run_dir
    pairs = []
    if os.path.exists(os.path.join(run_dir, "truth.f32")):
        pairs.append(("truth.f32", "posterior_mean.f32"))
    else:  # per-channel artifacts from a color run
        ch = 0
        while os.path.exists(os.path.join(run_dir, f"truth_c{ch}.f32")):
            pairs.append((f"truth_c{ch}.f32", f"posterior_mean_c{ch}.f32"))
            ch += 1
    if not pairs:
        raise ConfigError(f"{run_dir} lacks truth/posterior_mean artifacts")
    ps, ss = [], []
    for truth_name, mean_name in pairs:
        truth = read_raw_image(os.path.join(run_dir, truth_name))
        mean = read_raw_image(os.path.join(run_dir, mean_name))
        ps.append(psnr(truth, mean, peak=1.0))
        ss.append(ssim(truth, mean, peak=1.0))
    print(f"psnr_mean_db={np.mean(ps):.4f} ssim_mean={np.mean(ss):.6f} lpips=")
    return 0


def _cmd_bench(args):
    from .bench import run_bench
    seed = 0 if args.seed is None else args.seed
    run_bench(size=args.size, sweeps=args.sweeps, task=args.task, seed=seed)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is not None and backend.numba_available():
        import numba
        numba.set_num_threads(max(1, args.threads))
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "phantom":
            return _cmd_phantom(args)
        if args.command == "metrics":
            return _cmd_metrics(args)
        if args.command == "bench":
            return _cmd_bench(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ModelInconsistencyError,) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, ParameterDomainError, PoisGibbsError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
