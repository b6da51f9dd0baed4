r"""Special functions used by the lattice self-energies.

Complete elliptic integrals use the parameter convention

.. math:: K(m) = \int_0^{\pi/2} \frac{d\phi}{\sqrt{1 - m\sin^2\phi}}, \qquad
          E(m) = \int_0^{\pi/2} \sqrt{1 - m\sin^2\phi}\, d\phi

with the principal branch cut on :math:`m \in [1, \infty)`. Both are computed
with the arithmetic-geometric mean, which stays valid for complex `m` as long
as the square roots are taken with the "right choice" of sign.

The continued sheets ``II`` and ``III`` are the linear combinations that keep
the square-lattice self-energy continuous when `z` crosses the band from above
into the lower half plane (left and right of the band center respectively).
"""
from __future__ import annotations

import enum

import numpy as np

__all__ = [
    "DomainError",
    "Sheet",
    "ellip_k",
    "ellip_e",
    "ellip_k_sheet",
    "ellip_e_sheet",
    "lambert_w0",
    "bessel_j0",
    "bessel_y0",
    "hankel0_first",
]

EULER_GAMMA = 0.57721566490153286061


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class Sheet(enum.Enum):
    """Riemann sheet on which a multivalued function is evaluated."""

    I = "I"
    II = "II"
    III = "III"

    @classmethod
    def coerce(cls, value) -> "Sheet":
        if isinstance(value, cls):
            return value
        return cls(str(value).upper())


def _agm_sequence(m, mc):
    """Run the complex AGM of (1, sqrt(mc)) with ``mc = 1 - m``.

    Returns the limit and the weighted sum of squared half-differences
    needed for E(m).
    """
    a = np.ones_like(m)
    b = np.sqrt(mc)
    # c_0^2 = m; c_{n+1} = c_n^2 / (4 a_{n+1}) avoids cancellation
    csum = 0.5 * m
    c2 = m
    weight = 1.0
    for _ in range(80):
        a_next = 0.5 * (a + b)
        b_next = np.sqrt(a * b)
        # right choice: |a - b| <= |a + b|
        flip = np.abs(a_next - b_next) > np.abs(a_next + b_next)
        b_next = np.where(flip, -b_next, b_next)
        c = c2 / (4.0 * a_next)
        c2 = c * c
        csum = csum + weight * c2
        a, b = a_next, b_next
        weight *= 2.0
        if np.all(np.abs(c2) * weight <= 1e-17 * np.abs(a * a)) and np.all(
            np.abs(a - b) <= 1e-15 * np.abs(a)
        ):
            break
    return a, csum


def _pair(m, mc):
    m = np.asarray(m, dtype=complex)
    mc = 1.0 - m if mc is None else np.asarray(mc, dtype=complex)
    return np.broadcast_arrays(m, mc)


def _squeeze(x):
    return x[()] if np.ndim(x) == 0 else x


def _real_if_possible(result, m, closed=False):
    m = np.asarray(m)
    if not np.iscomplexobj(m) or np.all(m.imag == 0):
        if np.all(m.real <= 1.0) if closed else np.all(m.real < 1.0):
            result = result.real
    return _squeeze(result)


def ellip_k(m, mc=None):
    """Complete elliptic integral of the first kind, principal branch.

    Parameters
    ----------
    m : complex or array_like
        Parameter. ``m == 1`` is a logarithmic singularity.
    mc : complex or array_like, optional
        Complementary parameter ``1 - m``. Pass it when it is known more
        accurately than ``1 - m`` can be formed in floating point.

    Returns
    -------
    complex or ndarray
        Real for real ``m < 1``.

    Raises
    ------
    DomainError
        If any ``m`` equals 1.
    """
    m_arr, mc_arr = _pair(m, mc)
    if np.any(mc_arr == 0.0):
        raise DomainError("K(m) diverges at m = 1")
    agm, _ = _agm_sequence(m_arr, mc_arr)
    out = 0.5 * np.pi / agm
    return _real_if_possible(out, m) if mc is None else _squeeze(out)


def ellip_e(m, mc=None):
    """Complete elliptic integral of the second kind, principal branch.

    `mc` has the same meaning as in :func:`ellip_k`.
    """
    m_arr, mc_arr = _pair(m, mc)
    one = mc_arr == 0.0
    safe_m = np.where(one, 0.5, m_arr)
    safe_mc = np.where(one, 0.5, mc_arr)
    agm, csum = _agm_sequence(safe_m, safe_mc)
    e = 0.5 * np.pi / agm * (1.0 - csum)
    e = np.where(one, 1.0 + 0j, e)
    return _real_if_possible(e, m, closed=True) if mc is None else _squeeze(e)


def ellip_k_sheet(m, sheet, mc=None):
    """K(m) continued onto the given sheet: ``K(m) +/- 2i K(1-m)``.

    Sheet ``I`` is the principal branch, ``II`` takes the plus sign and
    ``III`` the minus sign.
    """
    sheet = Sheet.coerce(sheet)
    m_arr, mc_arr = _pair(m, mc)
    if sheet is Sheet.I:
        return ellip_k(m, mc)
    if np.any(m_arr == 0.0):
        raise DomainError("continued K(m) is singular at m = 0")
    sign = 1.0 if sheet is Sheet.II else -1.0
    out = ellip_k(m_arr, mc_arr) + sign * 2j * ellip_k(mc_arr, m_arr)
    return _squeeze(out)


def ellip_e_sheet(m, sheet, mc=None):
    """E(m) continued onto the given sheet: ``E(m) +/- 2i[K(1-m) - E(1-m)]``."""
    sheet = Sheet.coerce(sheet)
    m_arr, mc_arr = _pair(m, mc)
    if sheet is Sheet.I:
        return ellip_e(m, mc)
    if np.any(m_arr == 0.0) or np.any(mc_arr == 0.0):
        raise DomainError("continued E(m) is singular at m = 0 and m = 1")
    sign = 1.0 if sheet is Sheet.II else -1.0
    out = ellip_e(m_arr, mc_arr) + sign * 2j * (
        ellip_k(mc_arr, m_arr) - ellip_e(mc_arr, m_arr)
    )
    return _squeeze(out)


def _lambert_seed(x):
    x = np.asarray(x, dtype=float)
    w = np.empty_like(x)
    near = x < -0.25
    p = np.sqrt(np.maximum(2.0 * (np.e * x[near] + 1.0), 0.0))
    w[near] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    mid = (~near) & (x < 3.0)
    lx = np.log1p(x[mid])
    w[mid] = lx * (1.0 - np.log1p(lx) / (2.0 + lx))
    big = x >= 3.0
    l1 = np.log(x[big])
    l2 = np.log(l1)
    w[big] = l1 - l2 + l2 / l1
    return w


def lambert_w0(x):
    """Principal branch of the Lambert W function, ``w e^w = x``, ``w >= -1``.

    Halley iteration from a branch-point series, a log1p guess or the
    large-argument asymptote depending on `x`.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < -1.0 / np.e - 1e-15):
        raise DomainError("lambert_w0 requires x >= -1/e")
    x_arr = np.maximum(x_arr, -1.0 / np.e)
    w = _lambert_seed(np.atleast_1d(x_arr))
    xs = np.atleast_1d(x_arr)
    for _ in range(50):
        ew = np.exp(w)
        f = w * ew - xs
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * np.where(wp1 == 0, 1e-300, wp1))
        step = np.where(denom == 0, 0.0, f / np.where(denom == 0, 1.0, denom))
        w = w - step
        if np.all(np.abs(step) <= 4e-16 * (1.0 + np.abs(w))):
            break
    w = np.where(xs == 0.0, 0.0, w)
    w = np.where(xs == -1.0 / np.e, -1.0, w)
    return w.reshape(x_arr.shape)[()] if x_arr.ndim == 0 else w.reshape(x_arr.shape)


# Bessel functions of order zero: power series below _SERIES_MAX, Hankel
# asymptotic expansion above.
_SERIES_MAX = 12.0


def _j0_y0_series(x):
    q = 0.25 * x * x
    term = np.ones_like(x)
    j0 = np.ones_like(x)
    ysum = np.zeros_like(x)
    harmonic = 0.0
    for k in range(1, 80):
        term = -term * q / (k * k)
        harmonic += 1.0 / k
        j0 = j0 + term
        ysum = ysum - harmonic * term
        if np.all(np.abs(term) * (1.0 + harmonic) < 1e-17 * np.maximum(np.abs(j0), 1e-3)):
            break
    y0 = (2.0 / np.pi) * ((np.log(0.5 * x) + EULER_GAMMA) * j0 + ysum)
    return j0, y0


def _j0_y0_asymptotic(x):
    p = np.ones_like(x)
    q = np.zeros_like(x)
    a = 1.0
    inv8x = 1.0 / (8.0 * x)
    coeff = np.ones_like(x)
    last = np.full_like(x, np.inf)
    active = np.ones_like(x, dtype=bool)
    for k in range(1, 60):
        a = a * (2 * k - 1) ** 2 / k
        coeff = coeff * inv8x
        term = a * coeff
        # asymptotic series: stop each point at its smallest term
        active &= term < last
        last = term
        signed = np.where(active, term, 0.0)
        if k % 2 == 1:
            q = q + (-1) ** ((k + 1) // 2) * signed
        else:
            p = p + (-1) ** (k // 2) * signed
        if not np.any(active & (term > 1e-17)):
            break
    chi = x - 0.25 * np.pi
    amp = np.sqrt(2.0 / (np.pi * x))
    j0 = amp * (p * np.cos(chi) - q * np.sin(chi))
    y0 = amp * (p * np.sin(chi) + q * np.cos(chi))
    return j0, y0


def _j0_y0(x):
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    j0 = np.empty_like(flat)
    y0 = np.empty_like(flat)
    small = flat <= _SERIES_MAX
    if np.any(small):
        j0[small], y0[small] = _j0_y0_series(flat[small])
    if np.any(~small):
        j0[~small], y0[~small] = _j0_y0_asymptotic(flat[~small])
    return j0.reshape(x.shape), y0.reshape(x.shape)


def bessel_j0(x):
    """Bessel function of the first kind, order zero, for real ``x > 0``."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.where(x == 0.0, 1.0, _j0_y0(np.where(x == 0.0, 1.0, x))[0])
    return out[()] if out.ndim == 0 else out


def bessel_y0(x):
    """Bessel function of the second kind, order zero, for real ``x > 0``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise DomainError("Y0(x) requires x > 0")
    out = _j0_y0(x_arr)[1]
    return out[()] if out.ndim == 0 else out


def hankel0_first(x):
    """Hankel function ``H0^(1)(x) = J0(x) + i Y0(x)`` for real ``x > 0``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise DomainError("H0^(1)(x) requires x > 0")
    j0, y0 = _j0_y0(x_arr)
    out = j0 + 1j * y0
    return out[()] if out.ndim == 0 else out
