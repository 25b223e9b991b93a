"""Benchmark harness: noise injection, PSNR, convergence curves, p sweeps,
and the averaged PSNR table, with CSV emission for external plotting.

All runs are deterministic per (scenario, seed): trial t of a scenario uses
seed + t, so re-running a scenario reproduces every CSV byte for byte apart
from the wall-clock columns.  Trials execute in a thread pool; results are
assembled in trial order regardless of completion order.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .linop import blur_apply, idct2, make_gaussian_psf, spectral_decompose
from .pgmio import read_pgm
from .solvers import SolverConfig, Variant, run_solver, trajectory_diverged
from .weighting import build_filter, lambda_max_W

__all__ = [
    "STANDARD_IMAGES",
    "CURVE_HEADER",
    "TABLE_HEADER",
    "Scenario",
    "ResultTable",
    "TableRow",
    "PSweepPoint",
    "PSweepResult",
    "add_awgn",
    "psnr",
    "synthetic_image",
    "load_image",
    "wavelet_depth",
    "default_threshold_scale",
    "run_convergence_test",
    "run_p_sweep",
    "run_psnr_table",
]

STANDARD_IMAGES = ("cameraman", "lena", "barbara", "pirate", "peppers")

CURVE_HEADER = "iter,variant,n,p,trial,objective,psnr,seconds"
TABLE_HEADER = "image,sigma,algorithm,iters,psnr_mean,psnr_std,secs_mean"


def add_awgn(x, sigma, seed):
    """Add white Gaussian noise of standard deviation sigma, seeded."""
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    x = np.asarray(x, dtype=float)
    if sigma == 0:
        return x.copy()
    rng = np.random.default_rng(seed)
    return x + sigma * rng.standard_normal(x.shape)


def psnr(x, reference):
    """Peak signal-to-noise ratio in dB with peak 1.0, capped at 200 dB."""
    x = np.asarray(x, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if x.shape != reference.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {reference.shape}")
    mse = float(((x - reference) ** 2).mean())
    if mse < 1e-20:
        return 200.0
    return 10 * math.log10(1.0 / mse)


def synthetic_image(image_id, size=256):
    """Deterministic portrait-like test scene derived from the image name.

    A tilted sky gradient, one large dark figure, a few mid-scale ellipses,
    small bright/dark rectangles, two striped patches, a 1/f texture field
    and a light stipple, clipped to [0, 1].  The same name always yields the
    same image, so benchmarks run with zero external assets.
    """
    if size < 16:
        raise ValueError(f"size must be at least 16, got {size}")
    n = size
    seed = int(np.uint32(sum((i + 1) * b for i, b in enumerate(image_id.encode()))))
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:n, 0:n] / (n - 1)
    ang = rng.uniform(-0.4, 0.4)
    img = 0.75 - 0.35 * (yy + ang * (xx - 0.5))
    cx, cy = rng.uniform(0.3, 0.7), rng.uniform(0.45, 0.65)
    r1, r2 = rng.uniform(0.12, 0.2), rng.uniform(0.25, 0.38)
    figv = rng.uniform(0.05, 0.25)
    u = xx - cx
    w = yy - cy
    img[(u / r1) ** 2 + (w / r2) ** 2 < 1.0] = figv
    for _ in range(6):
        cx, cy = rng.uniform(0.1, 0.9, 2)
        r1, r2 = rng.uniform(0.03, 0.12, 2)
        th = rng.uniform(0, math.pi)
        v = rng.uniform(0.1, 0.9)
        u = (xx - cx) * math.cos(th) + (yy - cy) * math.sin(th)
        w = -(xx - cx) * math.sin(th) + (yy - cy) * math.cos(th)
        img[(u / r1) ** 2 + (w / r2) ** 2 < 1.0] = v
    # rectangle placement bounds shrink on small canvases but are unchanged
    # for the usual sizes, so standard images stay reproducible
    olo, ohi = (4, n - 24) if n >= 48 else (1, max(6, n // 2))
    slo, shi = (3, 20) if n >= 48 else (2, max(4, n // 4))
    for _ in range(18):
        x0, y0 = rng.integers(olo, ohi, 2)
        w0, h0 = rng.integers(slo, shi, 2)
        img[y0:y0 + h0, x0:x0 + w0] = rng.uniform(0.1, 0.9)
    ypix, xpix = np.mgrid[0:n, 0:n].astype(float)
    for _ in range(2):
        cx, cy = rng.uniform(0.2, 0.8, 2)
        r1, r2 = rng.uniform(0.06, 0.12, 2)
        rot = rng.uniform(0, math.pi)
        th = rng.uniform(0, math.pi)
        period = rng.uniform(4.0, 7.0)
        ph = rng.uniform(0, 2 * math.pi)
        u = (xx - cx) * math.cos(rot) + (yy - cy) * math.sin(rot)
        w = -(xx - cx) * math.sin(rot) + (yy - cy) * math.cos(rot)
        mask = (u / r1) ** 2 + (w / r2) ** 2 < 1.0
        pat = 0.3 * np.sin(2 * math.pi * (math.cos(th) * xpix + math.sin(th) * ypix) / period + ph)
        img[mask] += pat[mask]
    fy = np.arange(n)[:, None]
    fx = np.arange(n)[None, :]
    fr = np.sqrt(fy * fy + fx * fx)
    spec = rng.standard_normal((n, n)) / (1.0 + fr)
    spec[0, 0] = 0.0
    field_ = idct2(spec)
    field_ /= field_.std()
    img += 0.03 * field_
    img += 0.008 * rng.standard_normal((n, n))
    return np.clip(img, 0.0, 1.0)


def load_image(image_id, images_dir=None, size=256):
    """Load <images_dir>/<image_id>.pgm, or fall back to the synthetic scene.

    With images_dir given, a missing file is an error (no silent fallback).
    """
    if images_dir is not None:
        path = os.path.join(images_dir, f"{image_id}.pgm")
        if not os.path.exists(path):
            raise FileNotFoundError(f"test image not found: {path}")
        return read_pgm(path)
    return synthetic_image(image_id, size)


def wavelet_depth(shape, cap=8):
    """Deepest usable decomposition for an image shape, capped (default 8)."""
    h, w = shape
    d = 0
    while d < cap and h % 2 == 0 and w % 2 == 0 and h > 1 and w > 1:
        h //= 2
        w //= 2
        d += 1
    if d == 0:
        raise ValueError(f"image dims {shape} do not admit a wavelet level")
    return d


def default_threshold_scale(psf, shape, eta, n):
    """The default threshold scale p = lambda_max(W_n) for a given setup."""
    if n == 1:
        return 1.0
    h, w = shape
    return lambda_max_W(build_filter(spectral_decompose(psf, eta, w, h), n))


@dataclass
class Scenario:
    """One benchmark setting: image, blur, noise level and budgets.

    lam = None applies the default rule lambda = 10 * noise_sigma^2; K is
    the iteration budget of the unweighted baseline, and the weighted
    variants get K // iter_divisor iterations in the table benchmark.
    Trial t draws its noise from seed + t.
    """

    image_id: str
    noise_sigma: float
    K: int
    psf_size: int = 7
    psf_sigma: float = 4.0
    eta: float = 1.0
    lam: float | None = None
    n: int = 8
    iter_divisor: int = 3
    trials: int = 10
    seed: int = 0
    image_size: int = 256

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")
        if self.K < 0:
            raise ValueError(f"K must be >= 0, got {self.K}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.iter_divisor < 1:
            raise ValueError(f"iter_divisor must be >= 1, got {self.iter_divisor}")

    def resolved_lambda(self):
        return 10.0 * self.noise_sigma**2 if self.lam is None else self.lam


def _map_trials(fn, trials, workers):
    if workers == 1:
        return [fn(t) for t in range(trials)]
    if workers is None:
        workers = min(trials, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(trials)))


def _run_trial(truth, psf, scenario, variant, n, p, iters, trial):
    b = add_awgn(blur_apply(psf, truth), scenario.noise_sigma, scenario.seed + trial)
    cfg = SolverConfig(
        variant=variant, eta=scenario.eta, lam=scenario.resolved_lambda(),
        n=n, p=p, max_iters=iters,
        wavelet_levels=wavelet_depth(truth.shape), record_psnr=True,
    )
    return run_solver(cfg, b, psf, x0=b, truth=truth)


def _g17(v):
    return format(float(v), ".17g")


def format_trace_rows(trace, variant, n, p, trial):
    """CSV rows (no header) for one trace, per the convergence schema."""
    rows = []
    for rec in trace.records:
        ps = "" if rec.psnr is None else _g17(rec.psnr)
        rows.append(
            f"{rec.iter},{variant},{n},{_g17(p)},{trial},"
            f"{_g17(rec.objective)},{ps},{_g17(rec.seconds)}"
        )
    return rows


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(row + "\n")


def _trace_matrix(traces, iters, attr):
    out = np.full((len(traces), iters), np.nan)
    for t, trace in enumerate(traces):
        for rec in trace.records:
            val = getattr(rec, attr)
            if val is not None:
                out[t, rec.iter - 1] = val
    return out


def _nanmean_rows(mat):
    """Column means ignoring NaN; columns with no data stay NaN, no warnings."""
    counts = np.sum(~np.isnan(mat), axis=0)
    sums = np.nansum(mat, axis=0)
    out = np.full(mat.shape[1], np.nan)
    nz = counts > 0
    out[nz] = sums[nz] / counts[nz]
    return out


def run_convergence_test(scenario, variants, n_values, out_dir=None,
                         images_dir=None, workers=None):
    """Objective/PSNR traces per variant, per order n, per trial.

    Returns {variant: {n: {"objective", "psnr", "mean_objective", "diverged"}}}
    with (trials, K) arrays (NaN beyond a diverged trial's last iteration).
    With out_dir set, one CSV per variant is written containing every trial
    plus across-trial mean rows (trial column "mean").  Divergence is
    recorded in-band; the run always completes.
    """
    truth = load_image(scenario.image_id, images_dir, scenario.image_size)
    psf = make_gaussian_psf(scenario.psf_size, scenario.psf_sigma)
    results = {}
    for variant in variants:
        variant = Variant(variant)
        ns = list(n_values) if variant in (Variant.IFISTA, Variant.EFISTA) else [1]
        per_n = {}
        rows = []
        for n in ns:
            if variant is Variant.EFISTA:
                p = default_threshold_scale(psf, truth.shape, scenario.eta, n)
            else:
                p = 1.0
            runs = _map_trials(
                lambda t: _run_trial(truth, psf, scenario, variant, n, p, scenario.K, t),
                scenario.trials, workers)
            traces = [trace for _, trace in runs]
            obj = _trace_matrix(traces, scenario.K, "objective")
            psn = _trace_matrix(traces, scenario.K, "psnr")
            mean_obj = _nanmean_rows(obj)
            mean_psn = _nanmean_rows(psn)
            mean_sec = _nanmean_rows(_trace_matrix(traces, scenario.K, "seconds"))
            per_n[n] = {
                "objective": obj,
                "psnr": psn,
                "mean_objective": mean_obj,
                "diverged": [tr.diverged for tr in traces],
            }
            for t, trace in enumerate(traces):
                rows.extend(format_trace_rows(trace, variant.value, n, p, t))
            for k in range(scenario.K):
                if np.isnan(mean_obj[k]):
                    continue
                ps = "" if np.isnan(mean_psn[k]) else _g17(mean_psn[k])
                rows.append(
                    f"{k + 1},{variant.value},{n},{_g17(p)},mean,"
                    f"{_g17(mean_obj[k])},{ps},{_g17(mean_sec[k])}"
                )
        results[variant.value] = per_n
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            name = (f"curves_{scenario.image_id}_sigma{scenario.noise_sigma:g}"
                    f"_{variant.value}.csv")
            _write_csv(os.path.join(out_dir, name), CURVE_HEADER, rows)
    return results


@dataclass
class PSweepPoint:
    p: float
    objective: float
    diverged: bool


@dataclass
class PSweepResult:
    """Mean objective at the probe iteration, and a divergence tag, per p."""

    image_id: str
    n: int
    probe_iter: int
    points: list = field(default_factory=list)

    def divergence_frontier(self):
        """Smallest p from which on no run diverges (None if the largest does)."""
        frontier = None
        for pt in sorted(self.points, key=lambda q: q.p, reverse=True):
            if pt.diverged:
                break
            frontier = pt.p
        return frontier

    def argmin_objective(self):
        """The p whose probe-iteration objective is smallest."""
        best = min(self.points,
                   key=lambda q: q.objective if math.isfinite(q.objective) else math.inf)
        return best.p


def run_p_sweep(scenario, n, p_values, probe_iter, out_dir=None,
                images_dir=None, workers=None):
    """Sweep the threshold scale p at fixed order n.

    For each p the scenario is run scenario.trials times for scenario.K
    iterations; the result records the across-trial mean objective at
    probe_iter and whether the mean trajectory diverged (ends more than 0.1%
    above its minimum, or blew up outright).  Emits a (p, objective) CSV.
    """
    if not 1 <= probe_iter <= scenario.K:
        raise ValueError(
            f"probe_iter must be in [1, K={scenario.K}], got {probe_iter}")
    truth = load_image(scenario.image_id, images_dir, scenario.image_size)
    psf = make_gaussian_psf(scenario.psf_size, scenario.psf_sigma)
    result = PSweepResult(image_id=scenario.image_id, n=n, probe_iter=probe_iter)
    for p in p_values:
        runs = _map_trials(
            lambda t: _run_trial(truth, psf, scenario, Variant.EFISTA, n, float(p),
                                 scenario.K, t),
            scenario.trials, workers)
        traces = [trace for _, trace in runs]
        mean_obj = _nanmean_rows(_trace_matrix(traces, scenario.K, "objective"))
        curve = mean_obj[~np.isnan(mean_obj)]
        diverged = any(tr.diverged for tr in traces) or trajectory_diverged(curve)
        fprobe = float(mean_obj[probe_iter - 1])
        result.points.append(PSweepPoint(p=float(p), objective=fprobe, diverged=diverged))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        name = f"psweep_{scenario.image_id}_n{n}.csv"
        rows = [f"{_g17(pt.p)},{_g17(pt.objective)}" for pt in result.points]
        _write_csv(os.path.join(out_dir, name), "p,objective", rows)
    return result


@dataclass
class TableRow:
    image_id: str
    sigma: float
    algorithm: str
    iters: int
    psnr_mean: float
    psnr_std: float
    secs_mean: float


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)

    def render(self):
        """Aligned plain-text table."""
        headers = ["image", "sigma", "algorithm", "iters",
                   "psnr_mean", "psnr_std", "secs_mean"]
        cells = [headers]
        for r in self.rows:
            cells.append([
                r.image_id, f"{r.sigma:g}", r.algorithm, str(r.iters),
                f"{r.psnr_mean:.2f}", f"{r.psnr_std:.2f}", f"{r.secs_mean:.3f}",
            ])
        widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
        lines = []
        for row in cells:
            lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
        return "\n".join(lines)


def run_psnr_table(scenarios, out_dir=None, images_dir=None, workers=None):
    """Averaged final PSNR per algorithm: the baseline at K iterations, the
    weighted variants at K // iter_divisor.

    Returns a ResultTable; with out_dir set also writes table.csv and the
    rendered table.txt.
    """
    table = ResultTable()
    for sc in scenarios:
        truth = load_image(sc.image_id, images_dir, sc.image_size)
        psf = make_gaussian_psf(sc.psf_size, sc.psf_sigma)
        kw = max(sc.K // sc.iter_divisor, 1) if sc.K > 0 else 0
        p_def = default_threshold_scale(psf, truth.shape, sc.eta, sc.n)
        algs = [
            ("FISTA", Variant.FISTA, 1, 1.0, sc.K),
            ("IFISTA", Variant.IFISTA, sc.n, 1.0, kw),
            ("EFISTA", Variant.EFISTA, sc.n, p_def, kw),
        ]
        for name, variant, n, p, iters in algs:
            runs = _map_trials(
                lambda t: _run_trial(truth, psf, sc, variant, n, p, iters, t),
                sc.trials, workers)
            psnrs = np.array([psnr(x, truth) for x, _ in runs])
            secs = np.array([sum(rec.seconds for rec in tr.records) for _, tr in runs])
            table.rows.append(TableRow(
                image_id=sc.image_id, sigma=sc.noise_sigma, algorithm=name,
                iters=iters, psnr_mean=float(psnrs.mean()),
                psnr_std=float(psnrs.std()), secs_mean=float(secs.mean()),
            ))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        rows = [
            f"{r.image_id},{_g17(r.sigma)},{r.algorithm},{r.iters},"
            f"{_g17(r.psnr_mean)},{_g17(r.psnr_std)},{_g17(r.secs_mean)}"
            for r in table.rows
        ]
        _write_csv(os.path.join(out_dir, "table.csv"), TABLE_HEADER, rows)
        with open(os.path.join(out_dir, "table.txt"), "w", encoding="utf-8",
                  newline="\n") as f:
            f.write(table.render() + "\n")
    return table
