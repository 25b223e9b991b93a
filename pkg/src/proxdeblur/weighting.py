"""Weighted-gradient acceleration machinery.

One application of the weighting operator W_n fast-forwards n plain gradient
descent steps on the least squares data term:

    (I - eta A^T A)^n = I - eta W_n A^T A,
    W_n = sum_{i=1..n} C(n,i) (-1)^(i-1) (eta A^T A)^(i-1).

In the DCT eigenbasis W_n acts as the scalar filter

    phi(mu) = (1 - (1 - mu)^n) / mu,   mu = eigenvalue of eta A^T A,

which this module evaluates in a cancellation-free form and applies in
O(N log N).  The matrix-free n-step recursion is kept as an exact fallback
for operators with no spectral decomposition.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .linop import dct2, gradient, idct2

__all__ = [
    "MU_CLAMP",
    "WeightingFilter",
    "binomial_filter_weights",
    "build_filter",
    "apply_weighted_gradient_spectral",
    "apply_weighted_gradient_nstep",
    "lambda_max_W",
    "noise_std_amplification",
]

# Below this, mu is insignificant in double precision and phi takes its
# continuous limit n.
MU_CLAMP = 1e-14


def binomial_filter_weights(n):
    """Coefficients c[i] = C(n,i) * (-1)^(i-1) of the W_n matrix polynomial.

    W_n = sum_i c[i] (eta A^T A)^(i-1); the list is 1-indexed conceptually,
    c[0] here corresponds to the identity term.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ValueError(f"order n must be an integer, got {n!r}")
    if not 1 <= n <= 32:
        raise ValueError(f"order n must be in [1, 32], got {n}")
    return [math.comb(n, i) * (-1) ** (i - 1) for i in range(1, n + 1)]


@dataclass(frozen=True)
class WeightingFilter:
    """DCT-domain eigenvalues phi of W_n, with the eta used to build them."""

    n: int
    eta: float
    phi: np.ndarray


def _phi_closed(mu, n):
    """Evaluate phi(mu) = (1 - (1-mu)^n)/mu without catastrophic cancellation.

    The textbook expression loses all significance for mu around 1e-12..1e-8
    (enough to push max phi above n); -expm1(n*log1p(-mu))/mu is exact to a
    few ulps over the whole range.  phi = n below MU_CLAMP, and 1/mu once mu
    reaches 1.
    """
    out = np.full(mu.shape, float(n))
    m = mu > MU_CLAMP
    mm = np.minimum(mu[m], 1.0)
    with np.errstate(divide="ignore"):
        out[m] = np.where(mm < 1.0, -np.expm1(n * np.log1p(-mm)) / mu[m], 1.0 / mu[m])
    return out


def _phi_binomial_exact(mu, coeffs):
    """Reference phi by Horner evaluation of the binomial polynomial in
    exact rational arithmetic (mu is a dyadic float, coefficients are ints,
    so there is no rounding until the final conversion)."""
    m = Fraction(mu)
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * m + c
    return float(acc)


def build_filter(spect, n):
    """Build the W_n eigen-filter for a spectral decomposition.

    The closed form and the literal binomial polynomial must agree to 1e-10
    on a sample of frequencies; this is asserted at build time.  The filter
    invariants 1 <= phi <= n and phi*mu <= 1 are also checked (they hold
    whenever mu <= 1, i.e. eta <= 1/lambda_max(A^T A)).
    """
    coeffs = binomial_filter_weights(n)
    mu = spect.mu
    tol = 1e-12
    if mu.min() < -tol or mu.max() > 1.0 + tol:
        raise ValueError(
            "spectrum outside [0, 1] (needs eta <= 1/lambda_max(A^T A)): "
            f"mu range [{mu.min()!r}, {mu.max()!r}]"
        )
    phi = _phi_closed(mu, n)

    flat_mu = mu.ravel()
    sample = np.unique(np.concatenate([
        np.linspace(0, flat_mu.size - 1, 64).astype(int),
        [int(flat_mu.argmin()), int(flat_mu.argmax())],
    ]))
    for j in sample:
        if flat_mu[j] <= MU_CLAMP:
            continue
        ref = _phi_binomial_exact(flat_mu[j], coeffs)
        if abs(phi.ravel()[j] - ref) > 1e-10:
            raise ArithmeticError(
                f"phi forms disagree at mu={flat_mu[j]!r}: "
                f"closed {phi.ravel()[j]!r} vs polynomial {ref!r}"
            )

    if phi.min() < 1.0 - tol or phi.max() > n + tol or (phi * mu).max() > 1.0 + tol:
        raise ValueError(
            "filter invariants violated (needs mu in [0, 1], "
            "i.e. eta <= 1/lambda_max(A^T A)): "
            f"phi range [{phi.min()!r}, {phi.max()!r}], "
            f"max phi*mu {(phi * mu).max()!r}"
        )
    return WeightingFilter(n=n, eta=spect.eta, phi=phi)


def apply_weighted_gradient_spectral(filt, g):
    """W_n g through the DCT eigenbasis: idct2(phi * dct2(g))."""
    g = np.asarray(g, dtype=float)
    if g.shape != filt.phi.shape:
        raise ValueError(f"shape mismatch: filter {filt.phi.shape} vs image {g.shape}")
    return idct2(filt.phi * dct2(g))


def apply_weighted_gradient_nstep(psf, x, b, eta, n):
    """n plain gradient descent steps on 1/2||Az - b||^2 starting from x.

    Returns z_n where z_0 = x and z_{j+1} = z_j - eta A^T(A z_j - b), which
    equals x - eta W_n grad f(x).  Matrix-free; works for any kernel.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    z = np.asarray(x, dtype=float).copy()
    for _ in range(n):
        z -= eta * gradient(psf, z, b)
    return z


def lambda_max_W(filt):
    """Largest eigenvalue of W_n, attained at the smallest mu."""
    return float(filt.phi.max())


def noise_std_amplification(lambda_max_AtA, lambda_max_W, sigma_w, eta):
    """Upper bound on the per-pixel noise std of a weighted gradient step.

    sigma_x <= eta * sigma_w * sqrt(lambda_max(A^T A)) * lambda_max(W_n);
    with lambda_max(W) = 1 this reduces to the unweighted bound.  Diagnostic
    motivating the scaled shrinkage threshold p*lambda*eta.
    """
    return eta * sigma_w * math.sqrt(lambda_max_AtA) * lambda_max_W
