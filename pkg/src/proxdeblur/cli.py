"""Command-line harness: single deblur runs, convergence curves, threshold
sweeps and the averaged PSNR table, driven by plain-text config files.

Exit codes: 0 success, 1 usage/config/I-O error, 2 a run diverged (artifacts
are still written so the failure can be inspected).
"""

import argparse
import os
import sys

import numpy as np

from .experiments import (
    CURVE_HEADER,
    STANDARD_IMAGES,
    Scenario,
    add_awgn,
    default_threshold_scale,
    format_trace_rows,
    load_image,
    psnr,
    run_convergence_test,
    run_p_sweep,
    run_psnr_table,
    synthetic_image,
    wavelet_depth,
)
from .linop import blur_apply, make_gaussian_psf
from .pgmio import read_pgm, write_pgm
from .solvers import SolverConfig, Variant, run_solver, trajectory_diverged

__all__ = ["ConfigError", "parse_config", "main",
           "cmd_deblur", "cmd_curves", "cmd_sweep", "cmd_table"]


class ConfigError(Exception):
    """A config file problem; the message carries file and line number."""


def _auto_float(text):
    return None if text == "auto" else float(text)


def _split_list(text):
    return [item.strip() for item in text.split(",") if item.strip()]


def _float_list(text):
    return [float(item) for item in _split_list(text)]


def _int_list(text):
    return [int(item) for item in _split_list(text)]


_SCHEMA = {
    "image": str,
    "size": int,
    "psf_size": int,
    "psf_sigma": float,
    "noise_sigma": float,
    "variant": str,
    "n": int,
    "p": _auto_float,
    "eta": float,
    "lambda": _auto_float,
    "iterations": int,
    "trials": int,
    "seed": int,
    "out": str,
    "images": _split_list,
    "images_dir": str,
    "noise_levels": _float_list,
    "K_values": _int_list,
    "iter_divisor": int,
    "variants": _split_list,
    "n_values": _int_list,
    "p_values": _float_list,
    "probe_iter": int,
}


def _defaults():
    return {
        "image": "synthetic:cameraman",
        "size": 256,
        "psf_size": 7,
        "psf_sigma": 4.0,
        "noise_sigma": 0.01,
        "variant": "fista",
        "n": 8,
        "p": None,
        "eta": 1.0,
        "lambda": None,
        "iterations": 50,
        "trials": 10,
        "seed": 0,
        "out": "out",
        "images": list(STANDARD_IMAGES),
        "images_dir": None,
        "noise_levels": [0.01, 0.001],
        "K_values": [45, 180],
        "iter_divisor": 3,
        "variants": ["fista", "ifista", "efista"],
        "n_values": [8],
        "p_values": [float(p) for p in range(1, 9)],
        "probe_iter": 15,
    }


def parse_config(path):
    """Parse a key = value config file; unknown keys and bad values are
    rejected with the offending line number."""
    cfg = _defaults()
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        try:
            cfg[key] = _SCHEMA[key](value)
        except (TypeError, ValueError):
            raise ConfigError(
                f"{path}:{lineno}: bad value {value!r} for '{key}'") from None
    return cfg


def _image_source(cfg):
    """Resolve the image key to (image_id, images_dir or None for synthetic).

    Paths are checked here, before any computation starts.
    """
    image = cfg["image"]
    if image.startswith("synthetic:"):
        name = image.split(":", 1)[1]
        if not name:
            raise ConfigError("empty synthetic image name")
        return name, None
    if not image.endswith(".pgm"):
        raise ConfigError(f"image must be 'synthetic:<name>' or a .pgm path, got '{image}'")
    if not os.path.exists(image):
        raise ConfigError(f"input image not found: {image}")
    return os.path.basename(image)[:-4], os.path.dirname(image) or "."


def _variant_of(cfg):
    try:
        return Variant(cfg["variant"])
    except ValueError:
        valid = ", ".join(v.value for v in Variant)
        raise ConfigError(
            f"unknown variant '{cfg['variant']}' (valid: {valid})") from None


def _scenario(cfg, image_id):
    return Scenario(
        image_id=image_id,
        noise_sigma=cfg["noise_sigma"],
        K=cfg["iterations"],
        psf_size=cfg["psf_size"],
        psf_sigma=cfg["psf_sigma"],
        eta=cfg["eta"],
        lam=cfg["lambda"],
        n=cfg["n"],
        iter_divisor=cfg["iter_divisor"],
        trials=cfg["trials"],
        seed=cfg["seed"],
        image_size=cfg["size"],
    )


def cmd_deblur(cfg, quiet=False):
    """Blur, add noise, solve once, write blurred/deblurred PGMs + trace CSV."""
    image_id, images_dir = _image_source(cfg)
    variant = _variant_of(cfg)
    truth = load_image(image_id, images_dir, cfg["size"])
    psf = make_gaussian_psf(cfg["psf_size"], cfg["psf_sigma"])
    sigma = cfg["noise_sigma"]
    lam = cfg["lambda"] if cfg["lambda"] is not None else 10.0 * sigma**2
    n = cfg["n"] if variant in (Variant.IFISTA, Variant.EFISTA) else 1
    if variant is Variant.EFISTA:
        p = cfg["p"] if cfg["p"] is not None else default_threshold_scale(
            psf, truth.shape, cfg["eta"], n)
    else:
        p = 1.0
    b = add_awgn(blur_apply(psf, truth), sigma, cfg["seed"])
    solver_cfg = SolverConfig(
        variant=variant, eta=cfg["eta"], lam=lam, n=n, p=p,
        max_iters=cfg["iterations"], wavelet_levels=wavelet_depth(truth.shape),
        record_psnr=True,
    )
    x, trace = run_solver(solver_cfg, b, psf, x0=b, truth=truth)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    write_pgm(os.path.join(out, "blurred.pgm"), b)
    write_pgm(os.path.join(out, "deblurred.pgm"), x)
    rows = format_trace_rows(trace, variant.value, n, p, 0)
    with open(os.path.join(out, "trace.csv"), "w", encoding="utf-8",
              newline="\n") as f:
        f.write(CURVE_HEADER + "\n")
        for row in rows:
            f.write(row + "\n")
    diverged = trace.diverged or trajectory_diverged(trace.objectives())
    if not quiet:
        final = trace.records[-1].objective if trace.records else float("nan")
        print(
            f"{variant.value} n={n} p={p:g} iters={len(trace)}"
            f" objective={final:.6g} psnr={psnr(x, truth):.2f}dB"
            f" diverged={'yes' if diverged else 'no'}"
        )
    return 2 if diverged else 0


def cmd_curves(cfg, quiet=False):
    """Convergence traces for several variants/orders, one CSV per variant."""
    image_id, images_dir = _image_source(cfg)
    scenario = _scenario(cfg, image_id)
    for name in cfg["variants"]:
        try:
            Variant(name)
        except ValueError:
            valid = ", ".join(v.value for v in Variant)
            raise ConfigError(
                f"unknown variant '{name}' (valid: {valid})") from None
    results = run_convergence_test(
        scenario, cfg["variants"], cfg["n_values"],
        out_dir=cfg["out"], images_dir=images_dir)
    exit_code = 0
    for variant, per_n in results.items():
        for n, data in per_n.items():
            hard = sum(bool(d) for d in data["diverged"])
            curve = data["mean_objective"]
            curve = curve[~np.isnan(curve)]
            soft = trajectory_diverged(curve)
            if hard or soft:
                exit_code = 2
            if not quiet:
                tail = curve[-1] if curve.size else float("nan")
                print(f"{variant} n={n}: {scenario.trials} trials,"
                      f" final mean objective {tail:.6g}"
                      f"{', DIVERGED' if hard or soft else ''}")
    if not quiet:
        print(f"curves written to {cfg['out']}")
    return exit_code


def cmd_sweep(cfg, quiet=False):
    """Threshold-scale sweep at fixed order n; CSV of (p, objective)."""
    image_id, images_dir = _image_source(cfg)
    scenario = _scenario(cfg, image_id)
    result = run_p_sweep(
        scenario, cfg["n"], cfg["p_values"], cfg["probe_iter"],
        out_dir=cfg["out"], images_dir=images_dir)
    if not quiet:
        for pt in result.points:
            mark = " diverged" if pt.diverged else ""
            print(f"p={pt.p:g} objective={pt.objective:.6g}{mark}")
        frontier = result.divergence_frontier()
        print(f"frontier={'none' if frontier is None else f'{frontier:g}'}"
              f" argmin={result.argmin_objective():g}")
    return 0


def cmd_table(cfg, quiet=False):
    """Averaged PSNR table across images and noise levels."""
    if not cfg["images"]:
        raise ConfigError("empty image list")
    if len(cfg["noise_levels"]) != len(cfg["K_values"]):
        raise ConfigError(
            f"noise_levels has {len(cfg['noise_levels'])} entries but"
            f" K_values has {len(cfg['K_values'])}")
    images_dir = cfg["images_dir"]
    if images_dir is not None and not os.path.isdir(images_dir):
        raise ConfigError(f"images_dir not found: {images_dir}")
    if images_dir is not None:
        for image_id in cfg["images"]:
            path = os.path.join(images_dir, f"{image_id}.pgm")
            if not os.path.exists(path):
                raise ConfigError(f"test image not found: {path}")
    scenarios = []
    for image_id in cfg["images"]:
        for sigma, k in zip(cfg["noise_levels"], cfg["K_values"]):
            scenarios.append(Scenario(
                image_id=image_id, noise_sigma=sigma, K=k,
                psf_size=cfg["psf_size"], psf_sigma=cfg["psf_sigma"],
                eta=cfg["eta"], lam=cfg["lambda"], n=cfg["n"],
                iter_divisor=cfg["iter_divisor"], trials=cfg["trials"],
                seed=cfg["seed"], image_size=cfg["size"],
            ))
    table = run_psnr_table(scenarios, out_dir=cfg["out"], images_dir=images_dir)
    if not quiet:
        print(table.render())
    return 0


_COMMANDS = {
    "deblur": cmd_deblur,
    "curves": cmd_curves,
    "sweep": cmd_sweep,
    "table": cmd_table,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; reserve 2 for divergence.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def main(argv=None):
    parser = _Parser(
        prog="proxdeblur",
        description="Proximal-gradient deblurring benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("deblur", "run one solver on one image and write the results"),
        ("curves", "objective/PSNR traces for several variants"),
        ("sweep", "sweep the shrinkage scale p at fixed order n"),
        ("table", "averaged PSNR table across images and noise levels"),
    ]:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="path to a key = value config file")
        sp.add_argument("--out", default=None, help="output directory (overrides config)")
        sp.add_argument("--seed", type=int, default=None, help="base seed (overrides config)")
        sp.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.out is not None:
            cfg["out"] = args.out
        if args.seed is not None:
            cfg["seed"] = args.seed
        return _COMMANDS[args.command](cfg, quiet=args.quiet)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
