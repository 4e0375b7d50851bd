"""Command-line driver: ``gridkit <command> ...``.

Exit codes: 0 success, 2 bad arguments, 3 file errors, 4 numerical failure.
"""
import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import _parallel, io
from .baselines import fixed_point_weights, voronoi_weights
from .dcf_gp import PsfConfig, SolverOptions, gp_weights
from .errors import GridkitError, InvalidArgument, MemoryBudgetExceeded, NumericalError
from .experiment import ExperimentConfig, make_trajectory, run_experiment
from .gridding import grid_recon
from .kernel import KernelSpec, oversampled_size
from .metrics import mse, ssim
from .nudft import FourierSamples, nudft_type1, nudft_type2, psf_grid
from .phantom import PhantomSpec, default_phantom, phantom_fourier, phantom_image

logger = logging.getLogger("gridkit")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class _UsageError(Exception):
    pass


class _FileError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _size(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("image dimensions must be >= 1")
    return w, h


def _pair(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return vals


def _read(fn, path):
    """Run a reader, turning missing or malformed files into a file error."""
    try:
        return fn(path)
    except (OSError, ValueError, KeyError) as exc:
        if isinstance(exc, GridkitError):
            raise
        raise _FileError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------- commands

def cmd_gen_traj(args):
    if args.kind == "radial":
        spec = dict(kind="radial", n_spokes=args.spokes, n_per_spoke=args.points, k_max=args.k_max)
    elif args.kind == "spiral":
        spec = dict(kind="spiral", n_interleaves=args.interleaves, n_revolutions=args.revolutions,
                    n_per_interleave=args.points, k_max=args.k_max)
    else:
        spec = dict(kind="propeller", n_angles=args.angles, angle_step_deg=args.angle_step,
                    lines_per_angle=args.lines, line_sep=args.line_sep, points_per_line=args.points)
    s = make_trajectory(spec)
    io.write_trajectory(args.out, s)
    logger.info("wrote %d samples to %s", s.M, args.out)


def _load_phantom(path):
    if path is None:
        return default_phantom()
    return _read(lambda p: PhantomSpec.from_json(Path(p).read_text()), path)


def cmd_phantom(args):
    if args.out_image is None and args.out_samples is None:
        raise _UsageError("nothing to do: give --out-image and/or --out-samples")
    p = _load_phantom(args.spec)
    if args.out_image is not None:
        if args.size is None:
            raise _UsageError("--out-image needs --size")
        img = phantom_image(p, *args.size)
        io.write_image(args.out_image, img)
    if args.out_samples is not None:
        if args.traj is None:
            raise _UsageError("--out-samples needs --traj")
        s = _read(io.read_trajectory, args.traj)
        io.write_samples(args.out_samples, FourierSamples(s, phantom_fourier(p, s)))


def cmd_synth(args):
    img = _read(io.read_image, args.image)
    s = _read(io.read_trajectory, args.traj)
    io.write_samples(args.out_samples, FourierSamples(s, nudft_type2(img, s)))


def cmd_dcf(args):
    s = _read(io.read_trajectory, args.traj)
    trace = None
    if args.method == "voronoi":
        w = voronoi_weights(s)
    elif args.method == "fp":
        if args.size is None:
            raise _UsageError("--method fp needs --size")
        spec = KernelSpec.beatty(args.fp_kernel_width, args.alpha)
        size = tuple(oversampled_size(n, args.alpha) for n in args.size)
        w = fixed_point_weights(s, spec, args.fp_iters, matrix_size=size)
    else:
        if args.size is None:
            raise _UsageError("--method gp needs --size")
        cfg = PsfConfig.for_image(*args.size, gamma=args.gamma, eta=args.eta)
        opts = SolverOptions(max_iter=args.max_iter, obj_tol=args.obj_tol, mode=args.mode)
        w, trace = gp_weights(s, cfg, opts, return_trace=True)
    io.write_weights(args.out, w)
    if args.trace is not None:
        if trace is None:
            raise _UsageError("--trace is only available for --method gp")
        io.write_trace(args.trace, trace)


def cmd_recon(args):
    f = _read(io.read_samples, args.samples)
    w = _read(io.read_weights, args.weights)
    if args.direct:
        img = nudft_type1(f, w, *args.size)
    else:
        spec = KernelSpec.beatty(args.kernel_width, args.alpha)
        img = grid_recon(f, w, *args.size, alpha=args.alpha, spec=spec)
    io.write_image(args.out, img)
    if args.out_pgm is not None:
        io.write_pgm(args.out_pgm, np.abs(img.data))


def cmd_psf(args):
    s = _read(io.read_trajectory, args.traj)
    w = _read(io.read_weights, args.weights)
    img = psf_grid(s, w, *args.size)
    io.write_image(args.out, img)
    mag = np.abs(img.data)
    peak = mag.max() if mag.max() > 0 else 1.0
    with np.errstate(divide="ignore"):
        db = np.maximum(20 * np.log10(mag / peak), -120.0)
    io.write_pgm(args.out_db or f"{args.out}.db.pgm", db)


def cmd_eval(args):
    recon = _read(io.read_image, args.recon)
    truth = _read(io.read_image, args.truth)
    row = {
        "image": args.name or Path(args.truth).stem,
        "method": args.method or Path(args.recon).stem,
        "mse": mse(truth, recon),
        "ssim": ssim(truth, recon),
        "runtime_seconds": None,
    }
    io.write_report(args.out_report, [row])
    io.write_pgm(args.out_error or f"{args.out_report}.error_db.pgm", io.error_db(recon, truth))
    print(f"mse={row['mse']:.6g} ssim={row['ssim']:.6g}")


def desk_config_path():
    return resources.files("gridkit.data").joinpath("desk_radial.json")


def cmd_run_experiment(args):
    path = args.config if args.config is not None else desk_config_path()
    cfg = _read(ExperimentConfig.from_file, path)
    rows = run_experiment(cfg, args.out_dir)
    for r in rows:
        print(f"{r['method']:<12} mse={r['mse']:.6g} ssim={r['ssim']:.6g}")


# ------------------------------------------------------------------ parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: GRIDKIT_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="gridkit", description="Density compensation and gridding reconstruction.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-traj", parents=[common], help="write a sampling trajectory")
    g.add_argument("--kind", choices=("radial", "spiral", "propeller"), required=True)
    g.add_argument("--spokes", type=int, default=144)
    g.add_argument("--points", type=int, default=49, help="points per spoke, interleave or line")
    g.add_argument("--k-max", type=float, default=0.5)
    g.add_argument("--interleaves", type=int, default=16)
    g.add_argument("--revolutions", type=int, default=8)
    g.add_argument("--angles", type=int, default=12)
    g.add_argument("--angle-step", type=float, default=15.0, help="blade rotation in degrees")
    g.add_argument("--lines", type=int, default=16)
    g.add_argument("--line-sep", type=float, default=1.0 / 96)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_traj)

    g = sub.add_parser("phantom", parents=[common], help="rasterize a phantom and/or sample its spectrum")
    g.add_argument("--spec", default=None, help="phantom JSON (default: built-in phantom)")
    g.add_argument("--size", type=_size)
    g.add_argument("--out-image")
    g.add_argument("--traj")
    g.add_argument("--out-samples")
    g.set_defaults(func=cmd_phantom)

    g = sub.add_parser("synth", parents=[common], help="type-II NUDFT of an image")
    g.add_argument("--image", required=True)
    g.add_argument("--traj", required=True)
    g.add_argument("--out-samples", required=True)
    g.set_defaults(func=cmd_synth)

    g = sub.add_parser("dcf", parents=[common], help="compute density compensation weights")
    g.add_argument("--method", choices=("voronoi", "fp", "gp"), required=True)
    g.add_argument("--traj", required=True)
    g.add_argument("--size", type=_size)
    g.add_argument("--gamma", type=_pair, default=None)
    g.add_argument("--eta", type=_pair, default=(1.0, 1.0))
    g.add_argument("--max-iter", type=int, default=2000)
    g.add_argument("--obj-tol", type=float, default=1e-8)
    g.add_argument("--mode", choices=("auto", "dense", "matrix-free"), default="auto")
    g.add_argument("--fp-iters", type=int, default=8)
    g.add_argument("--fp-kernel-width", type=float, default=4.0)
    g.add_argument("--alpha", type=float, default=1.5, help="oversampling that sets the fp matrix size")
    g.add_argument("--out", required=True)
    g.add_argument("--trace")
    g.set_defaults(func=cmd_dcf)

    g = sub.add_parser("recon", parents=[common], help="reconstruct an image")
    g.add_argument("--samples", required=True)
    g.add_argument("--weights", required=True)
    g.add_argument("--size", type=_size, required=True)
    g.add_argument("--alpha", type=float, default=1.5)
    g.add_argument("--kernel-width", type=float, default=5.0)
    g.add_argument("--direct", action="store_true", help="exact weighted sum instead of gridding")
    g.add_argument("--out", required=True)
    g.add_argument("--out-pgm")
    g.set_defaults(func=cmd_recon)

    g = sub.add_parser("psf", parents=[common], help="point spread function on the doubled field of view")
    g.add_argument("--traj", required=True)
    g.add_argument("--weights", required=True)
    g.add_argument("--size", type=_size, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--out-db")
    g.set_defaults(func=cmd_psf)

    g = sub.add_parser("eval", parents=[common], help="score a reconstruction against the truth")
    g.add_argument("--recon", required=True)
    g.add_argument("--truth", required=True)
    g.add_argument("--out-report", required=True)
    g.add_argument("--out-error")
    g.add_argument("--name")
    g.add_argument("--method")
    g.set_defaults(func=cmd_eval)

    g = sub.add_parser("run-experiment", parents=[common], help="full phantom pipeline")
    g.add_argument("--config", default=None, help="experiment JSON (default: built-in desk config)")
    g.add_argument("--out-dir", default=None)
    g.set_defaults(func=cmd_run_experiment)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"gridkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    op = args.command
    try:
        # BLAS stays single-threaded; parallelism comes from fixed row blocks
        with threadpool_limits(limits=1, user_api="blas"), _parallel.threads(args.threads):
            args.func(args)
    except _UsageError as exc:
        print(f"gridkit {op}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (_FileError, OSError) as exc:
        print(f"gridkit {op}: file error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, MemoryBudgetExceeded) as exc:
        print(f"gridkit {op}: {exc.operation} failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidArgument as exc:
        print(f"gridkit {op}: invalid argument: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
