"""Bessel functions of order 0 and 1 and the Hankel function H0^(1).

For moderate arguments J_n is obtained by Miller's backward recurrence,
normalised with ``J0 + 2 sum J_2k = 1``; Y0 follows from the Neumann series

    Y0(x) = (2/pi) (ln(x/2) + gamma) J0(x) - (4/pi) sum_k (-1)^k J_2k(x) / k

and Y1 = -Y0' from differentiating that series term by term. Above
``ASYMPTOTIC_FROM`` the Hankel asymptotic expansion is used; at that point
its truncation error is far below double precision.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061
ASYMPTOTIC_FROM = 25.0
_ASYMPTOTIC_TERMS = 26
_BIG = 1e250


def _miller(x: np.ndarray):
    """Return (J0, J1, Y0, Y1) for 0 < x <= ASYMPTOTIC_FROM."""
    n_start = int(2 * np.ceil((1.2 * x.max() + 40.0) / 2.0))
    j_next = np.zeros_like(x)          # j_{n+1}
    j_cur = np.full_like(x, 1e-30)     # j_n, n = n_start (even)
    norm = 2.0 * j_cur
    k = n_start // 2
    neumann = (-1.0) ** k * j_cur / k
    dneumann = np.zeros_like(x)        # sum (-1)^k (j_{2k-1} - j_{2k+1}) / (2k)
    j1 = None
    for n in range(n_start, 0, -1):
        j_prev = (2.0 * n / x) * j_cur - j_next
        m = n - 1
        if m % 2 == 0 and m > 0:
            k = m // 2
            norm += 2.0 * j_prev
            neumann += (-1.0) ** k * j_prev / k
            # j_{m+1} = j_cur is the "2k+1" neighbour of J_2k
            dneumann -= (-1.0) ** k * j_cur / (2 * k)
        elif m % 2 == 1:
            # j_m is the "2k-1" neighbour of J_2k with 2k = m + 1
            k = (m + 1) // 2
            dneumann += (-1.0) ** k * j_prev / (2 * k)
        if m == 1:
            j1 = j_prev.copy()
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > _BIG
        if np.any(big):
            scale = np.where(big, 1.0 / _BIG, 1.0)
            j_next = j_next * scale
            j_cur = j_cur * scale
            norm = norm * scale
            neumann = neumann * scale
            dneumann = dneumann * scale
            if j1 is not None:
                j1 = j1 * scale
    j0 = j_cur
    norm += j0
    J0 = j0 / norm
    J1 = j1 / norm
    log_term = np.log(x / 2.0) + EULER_GAMMA
    Y0 = (2.0 / np.pi) * (log_term * J0 - 2.0 * neumann / norm)
    dY0 = (2.0 / np.pi) * (J0 / x - log_term * J1) - (4.0 / np.pi) * dneumann / norm
    return J0, J1, Y0, -dY0


def _asymptotic(x: np.ndarray, order: int):
    mu = 4.0 * order * order
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(_ASYMPTOTIC_TERMS):
        if k > 0:
            term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += sign * term
        else:
            q += sign * term
    omega = x - (0.5 * order + 0.25) * np.pi
    amp = np.sqrt(2.0 / (np.pi * x))
    c, s = np.cos(omega), np.sin(omega)
    return amp * (p * c - q * s), amp * (p * s + q * c)


def bessel_jy01(z):
    """Evaluate J0, J1, Y0, Y1 at positive real ``z`` (scalar or array)."""
    x = np.asarray(z, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("Bessel Y functions need strictly positive arguments")
    flat = x.ravel()
    out = np.empty((4, flat.size))
    small = flat <= ASYMPTOTIC_FROM
    if np.any(small):
        out[:, small] = np.stack(_miller(flat[small]))
    if np.any(~small):
        xl = flat[~small]
        j0, y0 = _asymptotic(xl, 0)
        j1, y1 = _asymptotic(xl, 1)
        out[:, ~small] = np.stack([j0, j1, y0, y1])
    out = out.reshape((4,) + x.shape)
    if x.ndim == 0:
        return tuple(float(v) for v in out)
    return tuple(out)


def bessel_j0(z):
    return bessel_jy01(z)[0]


def bessel_y0(z):
    return bessel_jy01(z)[2]


def hankel0_first_kind(z):
    """H0^(1)(z) = J0(z) + i Y0(z) for real z > 0."""
    j0, _, y0, _ = bessel_jy01(z)
    return j0 + 1j * np.asarray(y0) if np.ndim(z) else complex(j0, y0)
