"""Bessel/Hankel accuracy against an arbitrary-precision power-series oracle."""
import mpmath
import numpy as np
import pytest

from wavesift.errors import DomainError
from wavesift.special import bessel_jy01, hankel0_first_kind

mpmath.mp.dps = 80


def series_j0_y0(z):
    """Ascending series for J0 and Y0 evaluated in 80-digit arithmetic."""
    z = mpmath.mpf(z)
    q = (z / 2) ** 2
    term = mpmath.mpf(1)
    j0 = term
    harmonic = mpmath.mpf(0)
    tail = mpmath.mpf(0)
    m = 0
    while True:
        m += 1
        term *= -q / (m * m)
        harmonic += mpmath.mpf(1) / m
        j0 += term
        tail -= term * harmonic
        if abs(term) * harmonic < mpmath.mpf(10) ** -60 and m > q:
            break
    y0 = 2 / mpmath.pi * ((mpmath.log(z / 2) + mpmath.euler) * j0 + tail)
    return j0, y0


ZS = np.logspace(-3, 2, 1000)


@pytest.fixture(scope="module")
def oracle():
    return np.array([[float(v) for v in series_j0_y0(z)] for z in ZS])


def test_series_oracle_is_sound():
    for z in (1e-3, 0.7, 2 * np.pi, 37.0, 100.0):
        j0, y0 = series_j0_y0(z)
        assert abs(j0 - mpmath.besselj(0, z)) < 1e-30
        assert abs(y0 - mpmath.bessely(0, z)) < 1e-30


def test_hankel_matches_oracle(oracle):
    h = hankel0_first_kind(ZS)
    err = np.abs(h - (oracle[:, 0] + 1j * oracle[:, 1]))
    print(f"max |H0 - oracle| = {err.max():.2e}")
    assert err.max() <= 1e-10


def test_large_arguments():
    zs = np.logspace(2, 3, 50)
    ref = np.array([complex(mpmath.hankel1(0, z)) for z in zs])
    assert np.max(np.abs(hankel0_first_kind(zs) - ref)) <= 1e-10


def test_order_one_values():
    zs = np.logspace(-3, 2, 200)
    _, j1, _, y1 = bessel_jy01(zs)
    ref_j = np.array([float(mpmath.besselj(1, z)) for z in zs])
    ref_y = np.array([float(mpmath.bessely(1, z)) for z in zs])
    assert np.max(np.abs(j1 - ref_j)) <= 1e-10
    assert np.max(np.abs(y1 - ref_y) / np.maximum(1, np.abs(ref_y))) <= 1e-10


def test_wronskian():
    j0, j1, y0, y1 = bessel_jy01(ZS)
    # J0 Y0' - J0' Y0 with J0' = -J1 and Y0' = -Y1
    w = -j0 * y1 + j1 * y0
    rel = np.abs(w - 2 / (np.pi * ZS)) * (np.pi * ZS / 2)
    assert rel.max() <= 1e-8


def test_small_argument_limits():
    h = hankel0_first_kind(1e-8)
    assert abs(h.real - 1) < 1e-12
    assert h.imag < -11
    assert hankel0_first_kind(1e-12).imag < h.imag


def test_scalar_and_shape():
    assert isinstance(hankel0_first_kind(2 * np.pi), complex)
    assert hankel0_first_kind(np.ones((2, 3))).shape == (2, 3)


@pytest.mark.parametrize("z", [0.0, -1.0, np.nan])
def test_domain_error(z):
    with pytest.raises(DomainError):
        hankel0_first_kind(z)
