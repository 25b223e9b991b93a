"""Blur operator with reflexive boundaries, its adjoint, and DCT spectral form.

The measurement operator is a 2D correlation with a small normalized kernel,
extended at the borders by half-sample symmetric (reflexive) mirroring.  For
kernels that are flip-symmetric in both axes this operator is diagonalized by
the orthonormal 2D DCT-II, which is what makes the spectral fast path of the
weighting module possible.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal
from scipy.fft import dctn, idctn

__all__ = [
    "Psf",
    "SpectralDiag",
    "make_gaussian_psf",
    "blur_apply",
    "blur_adjoint",
    "gradient",
    "dct2",
    "idct2",
    "spectral_decompose",
    "lambda_max_AtA",
]


@dataclass(frozen=True)
class Psf:
    """Normalized odd-sized convolution kernel defining the blur operator.

    Attributes
    ----------
    size : int
        Side length of the square kernel, odd.
    taps : ndarray
        (size, size) weights summing to 1.
    """

    size: int
    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        object.__setattr__(self, "taps", taps)
        if self.size < 1 or self.size % 2 == 0:
            raise ValueError(f"psf size must be a positive odd integer, got {self.size}")
        if taps.shape != (self.size, self.size):
            raise ValueError(f"taps shape {taps.shape} does not match size {self.size}")
        if not np.all(np.isfinite(taps)):
            raise ValueError("psf taps must be finite")
        s = taps.sum()
        if abs(s - 1.0) > 1e-12:
            raise ValueError(f"psf taps must sum to 1 (got {s!r})")

    def is_doubly_symmetric(self, tol=1e-14):
        """True when the kernel is flip-symmetric in both axes."""
        t = self.taps
        return (np.abs(t - t[::-1, :]).max() <= tol
                and np.abs(t - t[:, ::-1]).max() <= tol)


def make_gaussian_psf(size, sigma):
    """Build a normalized Gaussian kernel.

    taps_ij is proportional to exp(-((i-c)^2 + (j-c)^2) / (2 sigma^2)) with
    c = (size-1)/2, normalized to unit sum.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"psf size must be a positive odd integer, got {size}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    c = (size - 1) / 2
    i = np.arange(size)
    g = np.exp(-((i - c) ** 2) / (2 * sigma**2))
    k = np.outer(g, g)
    return Psf(size=size, taps=k / k.sum())


def _check_operands(psf, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {x.shape}")
    if psf.size > min(x.shape):
        raise ValueError(
            f"kernel size {psf.size} exceeds image dims {x.shape[1]}x{x.shape[0]}"
        )
    return x


def blur_apply(psf, x):
    """Apply the blur operator A: correlation with reflexive boundary extension."""
    x = _check_operands(psf, x)
    return ndimage.correlate(x, psf.taps, mode="reflect")


def _reflect_index(n, pad):
    """Source index in [0, n) for positions -pad .. n+pad-1 under half-sample mirroring."""
    idx = np.arange(-pad, n + pad) % (2 * n)
    return np.where(idx >= n, 2 * n - 1 - idx, idx)


def blur_adjoint(psf, y):
    """Exact adjoint of blur_apply, boundary folding included.

    The forward blur is reflect-pad followed by a valid correlation, so the
    adjoint is a full convolution followed by folding the padded margin back
    onto its mirror sources.  For flip-symmetric kernels this coincides with
    blur_apply.
    """
    y = _check_operands(psf, y)
    if psf.size == 1:
        return y * psf.taps[0, 0]
    pad = psf.size // 2
    full = signal.convolve2d(y, psf.taps, mode="full")
    h, w = y.shape
    ridx = _reflect_index(h, pad)
    cidx = _reflect_index(w, pad)
    out = np.zeros_like(y)
    np.add.at(out, (ridx[:, None], cidx[None, :]), full)
    return out


def gradient(psf, x, b):
    """Gradient of the data term f(x) = 1/2 ||Ax - b||^2, i.e. A^T(Ax - b).

    For flip-symmetric kernels the adjoint equals the forward blur and the
    cheaper route is taken.
    """
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    if x.shape != b.shape:
        raise ValueError(f"shape mismatch: x {x.shape} vs b {b.shape}")
    r = blur_apply(psf, x) - b
    if psf.is_doubly_symmetric():
        return blur_apply(psf, r)
    return blur_adjoint(psf, r)


def dct2(x):
    """Orthonormal 2D DCT-II."""
    return dctn(x, type=2, norm="ortho")


def idct2(x):
    """Inverse of dct2."""
    return idctn(x, type=2, norm="ortho")


@dataclass(frozen=True)
class SpectralDiag:
    """Per-frequency eigenvalues of eta * A^T A in the 2D DCT-II basis.

    mu has shape (height, width); eta is the step size baked into mu.
    """

    width: int
    height: int
    mu: np.ndarray
    eta: float


def spectral_decompose(psf, eta, width, height):
    """Diagonalize eta * A^T A in the DCT basis for a doubly symmetric kernel.

    The eigenvalues of A are recovered by blurring a corner impulse and
    dividing its DCT by the DCT of the impulse itself; those of A^T A are
    their squares.  The result is verified against the spatial-domain
    operator on a random image before being returned.

    Raises
    ------
    ValueError
        If the kernel is not flip-symmetric in both axes (the spectral path
        only exists then; use the n-step fallback in the weighting module).
    ArithmeticError
        If the self-check against the spatial operator fails.
    """
    if not psf.is_doubly_symmetric():
        raise ValueError("spectral path requires a doubly symmetric psf")
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    e1 = np.zeros((height, width))
    e1[0, 0] = 1.0
    lam = dct2(blur_apply(psf, e1)) / dct2(e1)
    mu = np.clip(eta * lam * lam, 0.0, None)
    sd = SpectralDiag(width=width, height=height, mu=mu, eta=eta)

    rng = np.random.default_rng(0)
    x = rng.standard_normal((height, width))
    ref = eta * blur_adjoint(psf, blur_apply(psf, x))
    err = np.linalg.norm(idct2(mu * dct2(x)) - ref) / np.linalg.norm(ref)
    if not err <= 1e-10:
        raise ArithmeticError(
            f"spectral decomposition self-check failed (relative error {err:.3e})"
        )
    return sd


def lambda_max_AtA(psf, width, height):
    """Largest eigenvalue of A^T A.

    Uses the spectral decomposition when the kernel is doubly symmetric,
    otherwise power iteration to relative tolerance 1e-8 (at most 10000
    iterations).
    """
    if psf.is_doubly_symmetric():
        sd = spectral_decompose(psf, 1.0, width, height)
        return float(sd.mu.max())

    max_iters = 10000
    rng = np.random.default_rng(0)
    v = rng.standard_normal((height, width))
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    for it in range(1, max_iters + 1):
        v = blur_adjoint(psf, blur_apply(psf, v))
        lam = np.linalg.norm(v)
        if lam == 0.0:
            return 0.0
        v /= lam
        if abs(lam - lam_prev) <= 1e-8 * lam:
            return float(lam)
        lam_prev = lam
    raise ArithmeticError(
        f"power iteration did not converge after {max_iters} iterations"
    )
