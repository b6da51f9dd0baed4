r"""Emitter self-energies for the chain and the square lattice.

All self-energies are lattice Green functions scaled by ``g**2``:

.. math:: \Sigma(z; \mathbf n) = \frac{g^2}{N^d}\sum_{\mathbf k}
          \frac{e^{i\mathbf k\cdot\mathbf n}}{z - \omega(\mathbf k)}

evaluated in the continuum limit. ``n = 0`` is the single-emitter
self-energy and ``n = n_12`` the exchange term between two emitters.

Sheets
------
Sheet ``I`` is the physical sheet, analytic off the real band. On the chain
there is one continued sheet (``II``) reached by crossing the band from above.
On the square lattice the continuation is ``II`` left of the band centre and
``III`` right of it; the imaginary axis below the band centre is a cut
separating them.

Real arguments are interpreted as boundary values: from above on sheet ``I``
and from below on the continued sheets, so ``sigma(E, sheet="I")`` is the
retarded value ``Sigma(E + i0)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import integrate

from .specfun import (
    EULER_GAMMA,
    DomainError,
    Sheet,
    ellip_e,
    ellip_k,
    ellip_k_sheet,
    hankel0_first,
)

__all__ = [
    "SelfEnergyKind",
    "SigmaValue",
    "QuadratureError",
    "RecursionError_",
    "sigma_e_1d",
    "sigma12_1d",
    "sigma_e_2d",
    "sigma12_2d",
    "sigma_pm",
    "sigma_four",
    "sigma12_edge_hankel",
    "split",
    "cauchy_derivative",
    "EULER_GAMMA",
]

# boundary values on the real axis use this imaginary offset (in units of J)
_TINY = 1e-280
_RECURSION_TOL = 1e-8


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""

    def __init__(self, message, error_bound=None):
        super().__init__(message)
        self.error_bound = error_bound


class RecursionError_(RuntimeError):
    """Lattice recursion lost too many digits and no fallback is available."""

    def __init__(self, message, error_bound=None):
        super().__init__(message)
        self.error_bound = error_bound


class _Point(NamedTuple):
    """Reduced energy ``x = z/J`` with the two edge distances kept exactly."""

    x: np.ndarray
    xm: np.ndarray  # x - B
    xp: np.ndarray  # x + B


def _point(z, J, B, sheet) -> _Point:
    x = np.asarray(z, dtype=complex) / J
    if sheet is Sheet.I:
        x = np.where(x.imag == 0, x.real + 1j * _TINY, x)
    else:
        x = np.where(x.imag == 0, x.real - 1j * _TINY, x)
        if sheet is Sheet.II:
            x = np.where(x.real == 0, -_TINY + 1j * x.imag, x)
        elif sheet is Sheet.III:
            x = np.where(x.real == 0, _TINY + 1j * x.imag, x)
    return _Point(x, x - B, x + B)


def _edge_point(u, edge, B) -> _Point:
    """Point at distance `u` outside (or, for complex `u`, around) a band edge.

    ``edge = -1`` is the lower edge ``x = -(B + u)``, ``+1`` the upper one.
    """
    u = np.asarray(u, dtype=complex)
    if edge < 0:
        return _Point(-(B + u), -(2.0 * B + u), -u)
    return _Point(B + u, u, 2.0 * B + u)


def _points_flat(pt: _Point):
    x, xm, xp = np.broadcast_arrays(pt.x, pt.xm, pt.xp)
    return [_Point(*v) for v in zip(x.ravel(), xm.ravel(), xp.ravel())]


def _squeeze(v):
    return v[()] if np.ndim(v) == 0 else v


def _check_singular(pt: _Point, centre=False):
    # edge distances are exact, so test them rather than x; a real argument
    # sitting exactly on an edge or the centre only carries the tiny offset
    on = lambda d: (d.real == 0) & (np.abs(d.imag) <= _TINY)
    if np.any(on(pt.xm)) or np.any(on(pt.xp)):
        raise DomainError("self-energy is singular at the band edges")
    if centre and np.any(on(pt.x)):
        raise DomainError("self-energy is singular at the band centre")


# ----------------------------------------------------------------------------
# Chain
# ----------------------------------------------------------------------------


def _w1d(pt: _Point, sheet: Sheet):
    """``z sqrt(1 - 4J^2/z^2)/J`` on the requested sheet."""
    w = np.sqrt(pt.xm) * np.sqrt(pt.xp)
    return -w if sheet is not Sheet.I else w


def _y1d(pt: _Point, w):
    """Root of ``y^2 + x y + 1 = 0`` matching the sheet of `w`."""
    big = np.abs(pt.x + w) >= np.abs(pt.x - w)
    denom = np.where(big, pt.x + w, 1.0)
    return np.where(big, -2.0 / denom, -0.5 * (pt.x - w))


def _clog1p(v):
    """Complex ``log(1 + v)`` accurate for tiny ``|v|`` (numpy's is not)."""
    v = np.asarray(v, dtype=complex)
    small = np.abs(v) < 1e-3
    series = v * (1.0 - v * (0.5 - v * (1.0 / 3.0 - v * (0.25 - v * (0.2 - v / 6.0)))))
    return np.where(small, series, np.log(1.0 + np.where(small, 0.0, v)))


def _one_plus_power(pt: _Point, w, n, sign):
    """``1 + sign * y^n`` without cancellation next to the band edges.

    Near the lower (upper) edge ``y -> 1`` (``-1``); there ``y - y0`` is
    formed from the exact edge distance so the dark combination keeps its
    ``O(n sqrt(u))`` value even when ``u`` is far below machine epsilon.
    """
    y = _y1d(pt, w)
    out = 1.0 + sign * y**n
    x = np.broadcast_to(pt.x, np.shape(out))
    for edge_dist, y0 in ((pt.xp, 1.0), (pt.xm, -1.0)):
        near = np.abs(edge_dist) < 0.5
        if not np.any(near):
            continue
        d = -(edge_dist - w) / 2.0  # y - y0
        lead = sign * y0**n
        e = n * _clog1p(np.where(near, d / y0, 0.0))
        val = -np.expm1(e) if lead < 0 else 1.0 + np.exp(e)
        out = np.where(near & (np.abs(x) < 2.5), val, out)
    return out


def _sheet_1d(sheet) -> Sheet:
    sheet = Sheet.coerce(sheet)
    if sheet is Sheet.III:
        raise ValueError("the chain self-energy has a single continued sheet (II)")
    return sheet


def _sigma_1d(pt, n, g, J, sheet):
    _check_singular(pt)
    w = _w1d(pt, sheet)
    out = (g * g / J) / w
    if n:
        out = out * _y1d(pt, w) ** abs(int(n))
    return out


def sigma_e_1d(z, g, J=1.0, sheet="I"):
    """Single-emitter self-energy of the chain, ``g^2 / sqrt(z^2 - 4J^2)``.

    The square root is continued so that the result behaves as ``g^2/z`` at
    large ``|z|`` with the cut on ``[-2J, 2J]``; sheet ``II`` flips its sign.

    Parameters
    ----------
    z : complex or array_like
        Energy. Real values are treated as boundary values (see module notes).
    g, J : float
        Coupling and hopping.
    sheet : {"I", "II"}

    Returns
    -------
    complex or ndarray
    """
    sheet = _sheet_1d(sheet)
    return _squeeze(_sigma_1d(_point(z, J, 2.0, sheet), 0, g, J, sheet))


def sigma12_1d(z, n12, g, J=1.0, sheet="I"):
    """Exchange self-energy between chain emitters a distance `n12` apart.

    ``Sigma_12 = Sigma_e * y^|n12|`` where ``y`` is the root of
    ``y^2 + (z/J) y + 1 = 0`` that is inside the unit circle on sheet ``I``.
    """
    sheet = _sheet_1d(sheet)
    return _squeeze(_sigma_1d(_point(z, J, 2.0, sheet), int(n12), g, J, sheet))


# ----------------------------------------------------------------------------
# Square lattice: closed forms and recursions
# ----------------------------------------------------------------------------


def _m2d(pt: _Point):
    x2 = pt.x * pt.x
    return 16.0 / x2, pt.xm * pt.xp / x2


def _se_2d_red(pt, sheet):
    """Single-emitter self-energy in units of ``g^2/J``."""
    m, mc = _m2d(pt)
    return 2.0 / (np.pi * pt.x) * ellip_k_sheet(m, sheet, mc)


def _s11_principal(m, mc):
    """``(2/m - 1) K(m) - (2/m) E(m)``, by series when ``|m|`` is small."""
    m = np.asarray(m, dtype=complex)
    small = np.abs(m) < 0.25
    out = np.empty_like(m)
    if np.any(~small):
        mb, mcb = m[~small], np.asarray(mc)[~small] if np.ndim(mc) else mc
        out[~small] = (2.0 / mb - 1.0) * ellip_k(mb, mcb) - 2.0 / mb * ellip_e(mb, mcb)
    if np.any(small):
        ms = m[small]
        # sum_j m^j [4(j+1)/(2j+1) a_{j+1} - a_j], a_j = (binom(2j,j)/4^j)^2
        acc = np.zeros_like(ms)
        a_j = 1.0
        power = np.ones_like(ms)
        for j in range(80):
            a_next = a_j * ((2 * j + 1) / (2 * j + 2)) ** 2
            term = (4.0 * (j + 1) / (2 * j + 1) * a_next - a_j) * power
            acc = acc + term
            if np.all(np.abs(term) < 1e-18 * np.maximum(np.abs(acc), 1e-300)) and j > 2:
                break
            a_j = a_next
            power = power * ms
        out[small] = 0.5 * np.pi * acc
    return out


def _s11_2d_red(pt, sheet):
    """Exchange term for ``n12 = (1, 1)`` in units of ``g^2/J``."""
    m, mc = _m2d(pt)
    m, mc = np.broadcast_arrays(m, mc)
    val = _s11_principal(m, mc)
    if sheet is not Sheet.I:
        sign = 1.0 if sheet is Sheet.II else -1.0
        val = val + sign * 2j * (2.0 / m * ellip_e(mc, m) - ellip_k(mc, m))
    return 2.0 / (np.pi * pt.x) * val


def _s10_2d_red(pt, sheet, se=None):
    se = _se_2d_red(pt, sheet) if se is None else se
    return 0.25 * (1.0 - pt.x * se)


_NOISE = 1e-11


def _noise_pattern(n):
    # fixed pseudo-random signs so the estimate is deterministic
    return np.where(np.arange(n) % 3 == 1, -1.0, 1.0) * (1.0 + 0.5 * np.sin(np.arange(n)))


def _diag_run(x, s0, s1, nmax, noise):
    c = x * x / 8.0 - 1.0  # 2/m - 1
    out = np.empty((nmax + 1,) + np.shape(x), dtype=complex)
    out[0] = s0
    if nmax >= 1:
        out[1] = s1
    pattern = _noise_pattern(nmax + 1)
    for n in range(1, nmax):
        nxt = 4.0 * n / (2 * n + 1) * c * out[n] - (2 * n - 1) / (2 * n + 1) * out[n - 1]
        out[n + 1] = nxt * (1.0 + noise * pattern[n + 1])
    return out


def _diag_sequence(pt, sheet, nmax):
    """``Sigma(z; (n, n))`` for ``n = 0..nmax`` (units ``g^2/J``) and error bound."""
    s0 = _se_2d_red(pt, sheet)
    s1 = _s11_2d_red(pt, sheet)
    seq = _diag_run(pt.x, s0, s1, nmax, 0.0)
    if nmax <= 1:
        return seq, np.zeros(np.shape(seq), dtype=float)
    pert = _diag_run(pt.x, s0, s1, nmax, _NOISE)
    err = np.abs(pert - seq) * (4e-16 / _NOISE) * 10.0
    return seq, err


def _row_recursion(x, diag, s10, a, b, noise):
    """``G(a, b)`` with ``a > b >= 0`` from the diagonal by the lattice equation.

    Rows ``R_d(m) = G(m + d, m)`` are built upward in ``d``; ``diag`` holds
    ``R_0`` (first axis) and must reach index ``b + (a - b + 1)//2 + 1``.
    Trailing axes of `diag` and `x` are independent points.
    """
    d_target = a - b
    pattern = _noise_pattern(len(diag) + d_target + 2)
    prev = np.asarray(diag, dtype=complex)  # R_0
    cur = np.empty(prev.shape, dtype=complex)  # R_1
    cur[0] = s10
    for m in range(1, len(prev)):
        cur[m] = (-0.5 * x * prev[m] - cur[m - 1]) * (1.0 + noise * pattern[m])
    for d in range(1, d_target):
        size = min(len(cur), len(prev) - 1)
        nxt = np.empty((size,) + prev.shape[1:], dtype=complex)
        for m in range(size):
            left = prev[1] if m == 0 else nxt[m - 1]
            nxt[m] = (-x * cur[m] - prev[m] - prev[m + 1] - left) * (
                1.0 + noise * pattern[(m + d) % len(pattern)]
            )
        prev, cur = cur, nxt
    return cur[b]


def _quad_complex(f, a, b, points=(), epsabs=1e-13, epsrel=1e-11, limit=400):
    edges = [a] + sorted(p for p in points if a < p < b) + [b]
    total = 0.0 + 0.0j
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0:
            continue
        with warnings.catch_warnings():
            # the returned error bound is checked by the callers
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            re, e1 = integrate.quad(
                lambda q: f(q).real, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit
            )
            im, e2 = integrate.quad(
                lambda q: f(q).imag, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit
            )
        total += re + 1j * im
        err += e1 + e2
    return total, err


def _reduced_terms(x, q, flip=False):
    """``w_q = sqrt(x - A) sqrt(x + A)`` and ``y_q`` with ``A = 4 cos q``."""
    A = 4.0 * np.cos(q)
    w = np.sqrt(x - A) * np.sqrt(x + A)
    if flip:
        w = -w
    s = x + w
    big = np.abs(s) >= np.abs(x - w)
    if big:
        y = -A / s
    else:
        y = -(x - w) / A if A != 0 else 0.0
    return A, w, y


def _sing_points(x):
    pts = []
    if abs(x.real) < 4.0:
        c = x.real / 4.0
        pts = [np.arccos(c), np.arccos(-c)]
    return pts


def _quad_pair_red(x, nx, ny, tol=1e-10):
    """Sheet-I quadrature of the exchange term (units ``g^2/J``).

    Uses rotated momenta ``k_{x,y} = q_x +/- q_y``; the ``q_y`` integral is
    done in closed form, leaving a single integral over ``q``.
    """
    a = abs(nx + ny)
    b = abs(nx - ny)

    def f(q):
        _, w, y = _reduced_terms(x, q)
        return np.cos(a * q) * y**b / w

    val, err = _quad_complex(f, 0.0, np.pi, _sing_points(x))
    if err > tol * max(abs(val), 1e-3):
        raise QuadratureError(f"exchange-term quadrature error {err:.2e}", err)
    return val / np.pi


_WALK_MIN = 8.0


def _walk_series(x, a, b, tol=1e-17):
    """Sheet-I lattice Green function by counting closed walks, for ``|x| > 4``.

    ``G(a, b) = sum_L (-1)^L W_L / x^(L+1)`` with ``W_L`` the number of
    nearest-neighbour walks of length ``L`` from the origin to ``(a, b)``.
    """
    from math import lgamma

    logx = np.log(complex(x))
    total = 0.0 + 0.0j
    L = a + b
    while True:
        p, q = (L + a + b) // 2, (L + a - b) // 2
        logw = (
            2 * lgamma(L + 1) - lgamma(p + 1) - lgamma(L - p + 1) - lgamma(q + 1) - lgamma(L - q + 1)
        )
        term = (-1) ** L * np.exp(logw - (L + 1) * logx)
        total += term
        if abs(term) < tol * abs(total) and L > a + b + 4:
            return total
        L += 2


def _general_red(pt, sheet, nx, ny):
    """Exchange term in units of ``g^2/J`` for arbitrary ``(nx, ny)``.

    Vectorised over the points in `pt`; points whose recursion loses
    precision are recomputed by quadrature (sheet I only).
    """
    a, b = sorted((abs(int(nx)), abs(int(ny))), reverse=True)
    scalar = np.ndim(pt.x) == 0
    pt = _Point(*(np.atleast_1d(np.asarray(v, dtype=complex)) for v in np.broadcast_arrays(*pt)))
    if a == 0:
        out = _se_2d_red(pt, sheet)
    elif (a, b) == (1, 0):
        out = _s10_2d_red(pt, sheet)
    elif (a, b) == (1, 1):
        out = _s11_2d_red(pt, sheet)
    else:
        out = _general_recursion(pt, sheet, a, b)
    out = np.asarray(out, dtype=complex)
    return complex(out[0]) if scalar else out


def _general_recursion(pt, sheet, a, b):
    x = pt.x
    out = np.empty(x.shape, dtype=complex)
    walk = (np.abs(x) >= _WALK_MIN) if sheet is Sheet.I else np.zeros(x.shape, dtype=bool)
    for i in np.nonzero(walk)[0]:
        out[i] = _walk_series(complex(x[i]), a, b)
    rest = ~walk
    if not np.any(rest):
        return out
    sub = _Point(x[rest], pt.xm[rest], pt.xp[rest])
    if a == b:
        seq, err = _diag_sequence(sub, sheet, a)
        val, bound = seq[a], err[a]
        se = seq[0]
    else:
        L = b + (a - b + 1) // 2 + 3
        seq, _ = _diag_sequence(sub, sheet, L)
        se = seq[0]
        s10 = _s10_2d_red(sub, sheet, se)
        val = _row_recursion(sub.x, seq, s10, a, b, 0.0)
        shaped = _noise_pattern(len(seq)).reshape((-1,) + (1,) * (seq.ndim - 1))
        pert = _row_recursion(sub.x, seq * (1.0 + _NOISE * shaped), s10 * (1 + _NOISE), a, b, _NOISE)
        bound = np.abs(pert - val) * (4e-16 / _NOISE) * 10.0
    scale = np.maximum(np.maximum(np.abs(val), 1e-3 * np.abs(se)), 1e-300)
    bad = bound > _RECURSION_TOL * scale
    if np.any(bad):
        if sheet is not Sheet.I:
            worst = float(np.max(bound[bad]))
            raise RecursionError_(
                f"recursion for n12=({a},{b}) lost precision (bound {worst:.2e}) and "
                "no quadrature continuation exists on sheet " + sheet.value,
                worst,
            )
        val = np.array(val, dtype=complex)
        for i in np.nonzero(bad)[0]:
            val[i] = _quad_pair_red(complex(sub.x[i]), a, b)
    out[rest] = val
    return out


def sigma_e_2d(z, g, J=1.0, sheet="I"):
    r"""Single-emitter self-energy of the square lattice.

    .. math:: \Sigma_e(z) = \frac{2 g^2}{\pi z} K\!\left[(4J/z)^2\right]

    with ``K`` replaced by its sheet-``II``/``III`` continuation on the
    corresponding sheet.

    Parameters
    ----------
    z : complex or array_like
    g, J : float
    sheet : {"I", "II", "III"}

    Raises
    ------
    DomainError
        At ``z = 0`` and ``z = +/-4J``.
    """
    sheet = Sheet.coerce(sheet)
    pt = _point(z, J, 4.0, sheet)
    _check_singular(pt, centre=True)
    return _squeeze(g * g / J * _se_2d_red(pt, sheet))


def sigma12_2d(z, n12, g, J=1.0, sheet="I"):
    """Exchange self-energy for emitters separated by ``n12 = (nx, ny)``.

    ``(1, 0)`` and ``(1, 1)`` use closed forms in ``K`` and ``E``; diagonal
    separations use the three-term recursion along ``(n, n)``; everything
    else uses the lattice equation ``z G(n) + sum_nbrs G = delta_n0`` row by
    row away from the diagonal. Each recursion estimates its own rounding
    error; above ``1e-8`` relative the sheet-``I`` value is recomputed by
    adaptive quadrature. Arrays of `z` are supported for closed forms and
    diagonal separations.
    """
    sheet = Sheet.coerce(sheet)
    nx, ny = (int(v) for v in n12)
    pt = _point(z, J, 4.0, sheet)
    _check_singular(pt, centre=True)
    a, b = sorted((abs(nx), abs(ny)), reverse=True)
    pref = g * g / J
    if a == 0:
        return _squeeze(pref * _se_2d_red(pt, sheet))
    if (a, b) == (1, 0):
        return _squeeze(pref * _s10_2d_red(pt, sheet))
    if (a, b) == (1, 1):
        return _squeeze(pref * _s11_2d_red(pt, sheet))
    if np.ndim(pt.x) == 0:
        return pref * _general_red(pt, sheet, a, b)
    return pref * _general_red(pt, sheet, a, b).reshape(np.shape(pt.x))


def sigma_pm(z, n12, g, J=1.0, sheet="I", sign=+1, dim=2):
    """Collective self-energy ``Sigma_e +/- Sigma_12`` on a common sheet."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if dim == 1:
        return sigma_e_1d(z, g, J, sheet) + sign * sigma12_1d(z, n12, g, J, sheet)
    return sigma_e_2d(z, g, J, sheet) + sign * sigma12_2d(z, n12, g, J, sheet)


def sigma_four(z, n, g, J=1.0, sheet="I"):
    r"""Self-energy of the subradiant four-emitter mode (square placement).

    .. math:: \Sigma_4(z) = \frac{g^2}{4\pi^2}\iint_0^\pi d^2q\,
              \frac{16\sin^2(2nq_x)\sin^2(2nq_y)}{z + 4J\cos q_x\cos q_y}

    The ``q_y`` integral is done in closed form. Sheet ``I`` is available for
    every `z`; the continued sheets only on the imaginary axis, where both
    continuations coincide because the integrand vanishes at ``q = pi/2``.
    """
    sheet = Sheet.coerce(sheet)
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    zs = np.asarray(z, dtype=complex)
    if zs.ndim:
        return np.asarray([sigma_four(v, n, g, J, sheet) for v in zs.ravel()]).reshape(zs.shape)
    x = complex(zs) / J
    flip = sheet is not Sheet.I
    if flip and x.real != 0.0:
        raise NotImplementedError("continued four-emitter self-energy only on the imaginary axis")
    if x == 0:
        return 0.0 + 0.0j
    if x.imag == 0 and not flip:
        x = complex(x.real, _TINY)

    def f(q):
        _, w, y = _reduced_terms(x, q, flip)
        return np.sin(2 * n * q) ** 2 * (1.0 - y ** (4 * n)) / w

    pts = _sing_points(x) + [np.pi / 2]
    val, err = _quad_complex(f, 0.0, np.pi, pts)
    if err > max(1e-8 * abs(val), 1e-12):
        raise QuadratureError(f"four-emitter quadrature error {err:.2e}", err)
    return 2.0 * g * g / (np.pi * J) * val


def sigma12_edge_hankel(E, n12, g, J=1.0):
    """Isotropic band-edge approximation ``Sigma_12(-4J + E + i0)``.

    ``g^2/(4iJ) H0^(1)(|n12| sqrt(E/J))`` for ``0 < E << J``; only meant for
    validating :func:`sigma12_2d`.
    """
    r = float(np.hypot(*n12)) if np.ndim(n12) else float(abs(n12))
    if r <= 0:
        raise ValueError("|n12| must be >= 1")
    return g * g / (4j * J) * hankel0_first(r * np.sqrt(np.asarray(E, dtype=float) / J))


# ----------------------------------------------------------------------------
# Derived quantities
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SigmaValue:
    """A self-energy value with its split into shift and rate."""

    z: complex
    sheet: Sheet
    value: complex

    @property
    def delta_omega(self) -> float:
        return float(np.real(self.value))

    @property
    def gamma(self) -> float:
        return float(-2.0 * np.imag(self.value))


def split(value) -> Tuple[float, float]:
    """``(delta_omega, Gamma)`` from ``Sigma = delta_omega - i Gamma/2``."""
    value = complex(value)
    return value.real, -2.0 * value.imag


def cauchy_derivative(f, z, radius, nodes=32):
    """Derivative of an analytic function by the trapezoid rule on a circle.

    Exponentially convergent when `f` is analytic in a disc somewhat larger
    than `radius`.
    """
    theta = 2.0 * np.pi * (np.arange(nodes) + 0.5) / nodes
    shifts = radius * np.exp(1j * theta)
    vals = np.asarray(f(z + shifts), dtype=complex)
    return complex(np.mean(vals / shifts))


_TAGS = ("Single1D", "Pair1D", "PlusMinus1D", "Single2D", "Pair2D", "PlusMinus2D", "Four2D")


@dataclass(frozen=True)
class SelfEnergyKind:
    """Which self-energy enters the emitter Green function.

    Parameters
    ----------
    tag : str
        One of ``Single1D``, ``Pair1D``, ``PlusMinus1D``, ``Single2D``,
        ``Pair2D``, ``PlusMinus2D``, ``Four2D``. Pair kinds are the bare
        exchange term; ``PlusMinus`` kinds are ``Sigma_e + sign * Sigma_12``.
    g : float
        Coupling.
    J : float
        Hopping.
    n12 : int or tuple of int, optional
        Separation for pair kinds.
    sign : {+1, -1}
        Symmetric or antisymmetric combination.
    n : int, optional
        Square size parameter for ``Four2D``.
    """

    tag: str
    g: float
    J: float = 1.0
    n12: Optional[Union[int, Tuple[int, int]]] = None
    sign: int = 1
    n: Optional[int] = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown self-energy kind {self.tag!r}")
        if not self.g >= 0:
            raise ValueError("g must be non-negative")
        if self.tag.startswith(("Pair", "PlusMinus")):
            if self.n12 is None:
                raise ValueError(f"{self.tag} needs n12")
            n12 = self.n12
            if self.dim == 2:
                n12 = tuple(int(v) for v in n12)
                if len(n12) != 2 or n12 == (0, 0):
                    raise ValueError("n12 must be a non-zero 2-vector")
            else:
                n12 = int(n12)
                if n12 == 0:
                    raise ValueError("n12 must be non-zero")
            object.__setattr__(self, "n12", n12)
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.tag == "Four2D" and (self.n is None or int(self.n) < 1):
            raise ValueError("Four2D needs n >= 1")

    @property
    def dim(self) -> int:
        return 1 if self.tag.endswith("1D") else 2

    @property
    def band_edge(self) -> float:
        return 2.0 * self.dim * self.J

    @property
    def sheets(self) -> Tuple[Sheet, ...]:
        """Continued sheets below the band, left to right."""
        return (Sheet.II,) if self.dim == 1 else (Sheet.II, Sheet.III)

    @property
    def closed_form(self) -> bool:
        """Whether every sheet is available for all ``z`` (not just sheet I)."""
        return self.tag != "Four2D"

    def sheet_for(self, re_z: float) -> Sheet:
        """Continued sheet reached by descending through the band at `re_z`."""
        if self.dim == 1 or re_z < 0:
            return Sheet.II
        return Sheet.III

    # -- evaluation ---------------------------------------------------------

    def _reduced(self, pt: _Point, sheet: Sheet):
        """Value in units of ``g^2/J`` at a prepared point."""
        if self.dim == 1:
            _check_singular(pt)
            w = _w1d(pt, sheet)
            se = 1.0 / w
            if self.tag == "Single1D":
                return se
            if self.tag == "Pair1D":
                return se * _y1d(pt, w) ** abs(self.n12)
            return se * _one_plus_power(pt, w, abs(self.n12), self.sign)
        if self.tag == "Four2D":
            _check_singular(pt)
            return np.asarray(sigma_four(pt.x, self.n, 1.0, 1.0, sheet))
        _check_singular(pt, centre=True)
        if self.tag == "Single2D":
            return _se_2d_red(pt, sheet)
        a, b = sorted((abs(self.n12[0]), abs(self.n12[1])), reverse=True)
        if (a, b) == (1, 0):
            se = _se_2d_red(pt, sheet)
            ex = _s10_2d_red(pt, sheet, se)
        elif (a, b) == (1, 1):
            se = _se_2d_red(pt, sheet)
            ex = _s11_2d_red(pt, sheet)
        else:
            se = _se_2d_red(pt, sheet)
            ex = _general_red(pt, sheet, a, b)
            ex = ex.reshape(np.shape(pt.x)) if np.ndim(pt.x) else ex
        if self.tag == "Pair2D":
            return ex
        return se + self.sign * ex

    def __call__(self, z, sheet="I"):
        """Evaluate at `z` on `sheet` (real `z` = boundary value)."""
        sheet = Sheet.coerce(sheet)
        if self.dim == 1:
            sheet = _sheet_1d(sheet)
        pt = _point(z, self.J, self.band_edge / self.J, sheet)
        return _squeeze(self.g**2 / self.J * self._reduced(pt, sheet))

    def near_edge(self, u, edge, sheet="I"):
        """Evaluate at ``z = edge * (band_edge + u J)`` without cancellation.

        `u` may be complex; useful for bound states exponentially close to a
        band edge where ``z`` itself cannot resolve the offset.
        """
        sheet = Sheet.coerce(sheet)
        pt = _edge_point(u, edge, self.band_edge / self.J)
        return _squeeze(self.g**2 / self.J * self._reduced(pt, sheet))

    def retarded(self, E):
        """Boundary value ``Sigma(E + i0)`` on the physical sheet."""
        return self(np.asarray(E, dtype=float), Sheet.I)

    def derivative(self, z, sheet="I", radius=None):
        """``dSigma/dz`` by a Cauchy circle that stays clear of the cuts."""
        sheet = Sheet.coerce(sheet)
        z = complex(z)
        if radius is None:
            radius = 0.25 * self._cut_distance(z, sheet)
        return cauchy_derivative(lambda zz: self(zz, sheet), z, radius)

    def _cut_distance(self, z, sheet):
        B = self.band_edge
        if sheet is Sheet.I:
            # distance to the real segment [-B, B]
            dx = max(abs(z.real) - B, 0.0)
            d = np.hypot(dx, z.imag)
        else:
            d = abs(z.imag)
            d = min(d, abs(abs(z.real) - B) if z.imag < 0 else d)
            if self.dim == 2:
                d = min(d, abs(z.real))
        return max(d, 1e-300)

    def edge_log_coefficient(self, edge) -> float:
        """Weight ``c`` of the ``-c g^2/(4 pi J) log(1/u)`` edge divergence (2D)."""
        if self.dim != 2:
            raise ValueError("logarithmic edge divergence only on the square lattice")
        if self.tag == "Single2D":
            return 1.0
        if self.tag == "Four2D":
            return 0.0
        phase = 1.0 if edge < 0 else (-1.0) ** (self.n12[0] + self.n12[1])
        if self.tag == "Pair2D":
            return phase
        return 1.0 + self.sign * phase
