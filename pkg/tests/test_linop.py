import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxdeblur.linop import (
    Psf,
    blur_adjoint,
    blur_apply,
    dct2,
    gradient,
    idct2,
    lambda_max_AtA,
    make_gaussian_psf,
    spectral_decompose,
)
from proxdeblur.oracle import densify_blur, direct_blur


def test_gaussian_taps_match_hand_formula():
    # size 3, sigma 1: unnormalized weights are exp(0), exp(-1/2), exp(-1)
    t = make_gaussian_psf(3, 1.0).taps
    s = 1.0 + 4 * math.exp(-0.5) + 4 * math.exp(-1.0)
    assert t[1, 1] == pytest.approx(1.0 / s, rel=1e-14)
    assert t[0, 1] == pytest.approx(math.exp(-0.5) / s, rel=1e-14)
    assert t[0, 0] == pytest.approx(math.exp(-1.0) / s, rel=1e-14)


@pytest.mark.parametrize("size", [1, 3, 5, 7])
@pytest.mark.parametrize("sigma", [0.5, 1.0, 4.0])
def test_gaussian_psf_properties(size, sigma):
    psf = make_gaussian_psf(size, sigma)
    t = psf.taps
    assert t.shape == (size, size)
    assert abs(t.sum() - 1.0) < 1e-12
    assert (t > 0).all()
    assert psf.is_doubly_symmetric()
    assert t.max() == t[size // 2, size // 2]


def test_psf_validation():
    with pytest.raises(ValueError):
        make_gaussian_psf(4, 1.0)
    with pytest.raises(ValueError):
        make_gaussian_psf(3, 0.0)
    with pytest.raises(ValueError):
        Psf(size=3, taps=np.ones((3, 3)))  # sums to 9
    with pytest.raises(ValueError):
        Psf(size=3, taps=np.full((2, 2), 0.25))
    bad = np.full((3, 3), 1 / 9)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        Psf(size=3, taps=bad)


def test_blur_matches_direct_summation(rng, psf31, psf52):
    x = rng.standard_normal((9, 11))
    for psf in (psf31, psf52):
        assert np.abs(blur_apply(psf, x) - direct_blur(psf, x)).max() < 1e-12


def test_blur_matches_dense_matrix(rng, psf31):
    x = rng.standard_normal((8, 8))
    A = densify_blur(psf31, 8, 8)
    got = (A.entries @ x.ravel()).reshape(8, 8)
    assert np.abs(got - blur_apply(psf31, x)).max() < 1e-12


def test_blur_preserves_constants(psf31, psf52):
    # unit tap sum plus mirrored borders means flat images pass through
    x = np.full((10, 12), 0.37)
    for psf in (psf31, psf52):
        assert np.abs(blur_apply(psf, x) - x).max() < 1e-12


def test_blur_rejects_bad_operands(psf31):
    with pytest.raises(ValueError):
        blur_apply(psf31, np.ones(8))
    with pytest.raises(ValueError):
        blur_apply(make_gaussian_psf(7, 1.0), np.ones((5, 9)))


def test_adjoint_identity_symmetric_and_not(rng, psf31, asymmetric_psf):
    for psf in (psf31, asymmetric_psf):
        for shape in ((7, 7), (6, 10), (12, 5)):
            x = rng.standard_normal(shape)
            y = rng.standard_normal(shape)
            lhs = float((blur_apply(psf, x) * y).sum())
            rhs = float((x * blur_adjoint(psf, y)).sum())
            assert lhs == pytest.approx(rhs, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(
    h=st.integers(min_value=3, max_value=14),
    w=st.integers(min_value=3, max_value=14),
    size=st.sampled_from([1, 3]),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_adjoint_identity_property(h, w, size, seed):
    r = np.random.default_rng(seed)
    taps = r.uniform(0.01, 1.0, (size, size))
    psf = Psf(size=size, taps=taps / taps.sum())
    x = r.standard_normal((h, w))
    y = r.standard_normal((h, w))
    lhs = float((blur_apply(psf, x) * y).sum())
    rhs = float((x * blur_adjoint(psf, y)).sum())
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_adjoint_equals_forward_when_doubly_symmetric(rng, psf52):
    y = rng.standard_normal((11, 9))
    assert np.abs(blur_adjoint(psf52, y) - blur_apply(psf52, y)).max() < 1e-12


def test_gradient_matches_dense_normal_equations(rng, psf31):
    x = rng.standard_normal((8, 8))
    b = rng.standard_normal((8, 8))
    A = densify_blur(psf31, 8, 8).entries
    want = (A.T @ (A @ x.ravel() - b.ravel())).reshape(8, 8)
    assert np.abs(gradient(psf31, x, b) - want).max() < 1e-10


def test_gradient_matches_finite_differences(rng, psf31, asymmetric_psf):
    for psf in (psf31, asymmetric_psf):
        x = rng.standard_normal((6, 6))
        b = rng.standard_normal((6, 6))
        g = gradient(psf, x, b)

        def f(v):
            r = blur_apply(psf, v) - b
            return 0.5 * float((r * r).sum())

        h = 1e-6
        for _ in range(6):
            d = rng.standard_normal((6, 6))
            d /= np.linalg.norm(d)
            num = (f(x + h * d) - f(x - h * d)) / (2 * h)
            ana = float((g * d).sum())
            if abs(ana) > 1e-8:
                assert num == pytest.approx(ana, rel=1e-5)
            else:
                assert abs(num - ana) < 1e-6


def test_gradient_shape_mismatch(psf31):
    with pytest.raises(ValueError):
        gradient(psf31, np.ones((6, 6)), np.ones((6, 7)))


def test_dct_roundtrip_and_energy(rng):
    x = rng.standard_normal((16, 24))
    c = dct2(x)
    assert np.abs(idct2(c) - x).max() < 1e-12
    assert np.linalg.norm(c) == pytest.approx(np.linalg.norm(x), rel=1e-12)


def test_spectral_eigenvalues_match_dense(psf31):
    eta = 0.7
    sd = spectral_decompose(psf31, eta, 8, 8)
    A = densify_blur(psf31, 8, 8).entries
    dense = np.linalg.eigvalsh(eta * (A.T @ A))
    assert np.abs(np.sort(sd.mu.ravel()) - np.sort(dense)).max() < 1e-10


def test_spectral_applies_operator(rng, psf52):
    eta = 0.9
    sd = spectral_decompose(psf52, eta, 16, 12)
    x = rng.standard_normal((12, 16))
    want = eta * blur_apply(psf52, blur_apply(psf52, x))
    got = idct2(sd.mu * dct2(x))
    rel = np.linalg.norm(got - want) / np.linalg.norm(want)
    assert rel < 1e-10


def test_spectral_decompose_rejections(asymmetric_psf, psf31):
    with pytest.raises(ValueError):
        spectral_decompose(asymmetric_psf, 1.0, 8, 8)
    with pytest.raises(ValueError):
        spectral_decompose(psf31, 0.0, 8, 8)


def test_lambda_max_matches_dense(psf52):
    lam = lambda_max_AtA(psf52, 12, 12)
    A = densify_blur(psf52, 12, 12).entries
    assert lam == pytest.approx(np.linalg.eigvalsh(A.T @ A).max(), abs=1e-8)


def test_lambda_max_power_iteration_fallback(asymmetric_psf):
    lam = lambda_max_AtA(asymmetric_psf, 8, 8)
    A = densify_blur(asymmetric_psf, 8, 8).entries
    want = float(np.linalg.eigvalsh(A.T @ A).max())
    assert lam == pytest.approx(want, rel=1e-6)


def test_lambda_max_is_one_for_normalized_symmetric_kernels(psf74):
    # mass preservation under mirrored borders puts the top eigenvalue at 1
    assert lambda_max_AtA(psf74, 64, 64) == pytest.approx(1.0, abs=1e-12)
    box = Psf(size=3, taps=np.full((3, 3), 1 / 9))
    assert lambda_max_AtA(box, 16, 16) == pytest.approx(1.0, abs=1e-9)
