r"""Exact emitter dynamics from the analytic structure of the Green function.

The amplitude of an emitter (or collective emitter mode) prepared in its
excited state is

.. math:: C(t) = \frac{i}{2\pi}\int dE\, G(E + i0)\, e^{-iEt}, \qquad
          G(z) = \frac{1}{z - \Delta - \Sigma(z)}.

Closing the contour in the lower half plane picks up

* real poles outside the band (bound states, ``LBS``/``UBS``) on sheet I,
* complex poles on the continued sheets (unstable poles, ``UP``),
* one detour per vertical branch cut hanging from each band edge and, on the
  square lattice, from the band centre (``LBC``, ``UBC``, ``MBC``).

Each cut contributes

.. math:: C_{\rm cut}(t) = \frac{e^{-i x_0 t}}{2\pi}\int_0^\infty dy\,
          [G_R - G_L](x_0 - iy)\, e^{-yt}

with ``G_L``/``G_R`` evaluated on the sheets to the left and right of the cut.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .selfenergy import RecursionError_, SelfEnergyKind, cauchy_derivative
from .specfun import EULER_GAMMA, DomainError, Sheet, lambert_w0

__all__ = [
    "PoleContribution",
    "BranchCutContribution",
    "DynamicsDecomposition",
    "MarkovRate",
    "PoleSearchError",
    "find_bound_states",
    "find_unstable_poles",
    "axis_poles",
    "branch_cut_contribution",
    "decompose",
    "amplitude",
    "amplitude_fourier",
    "markov_rate",
    "closed_forms",
    "bound_state_energy_lambert",
    "gamma_bar_e",
    "gamma_sb_asymptote",
    "c4_infinity",
    "r_sb_1d",
    "subradiant_pole_2d",
]


class PoleSearchError(RuntimeError):
    """Root finding did not converge; `last` holds the final iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class PoleContribution:
    """A pole of the Green function crossed by the deformed contour.

    ``log_u`` is ``log`` of the distance to the band edge for bound states
    too close to it to be resolved in double precision (``z`` is then the
    edge itself and ``residue`` underflows to zero).
    """

    kind: str
    sheet: Sheet
    z: complex
    residue: complex
    log_u: Optional[float] = None

    def value_at(self, t):
        return self.residue * np.exp(-1j * self.z * np.asarray(t, dtype=float))

    @property
    def rate(self) -> float:
        """Decay rate ``-2 Im z`` of the population carried by this pole."""
        return -2.0 * self.z.imag


@dataclass
class BranchCutContribution:
    """Detour integral around one vertical branch cut.

    The cut hangs from ``x0`` down to ``x0 - i*inf``. ``nodes`` and
    ``weights`` discretise ``y`` and ``jump`` holds ``(G_R - G_L)/(2 pi)``
    at ``x0 - i y``.
    """

    cut: str
    x0: float
    nodes: np.ndarray
    weights: np.ndarray
    jump: np.ndarray
    error_estimate: float = 0.0

    def value_at(self, t):
        t = np.asarray(t, dtype=float)
        tt = np.atleast_1d(t)
        # chunk over t to keep the (nt, ny) matrix small
        out = np.empty(tt.shape, dtype=complex)
        wj = self.weights * self.jump
        for i in range(0, tt.size, 256):
            block = tt.ravel()[i : i + 256]
            damp = np.exp(-np.outer(block, self.nodes))
            out.ravel()[i : i + 256] = (damp @ wj) * np.exp(-1j * self.x0 * block)
        return out.reshape(t.shape) if t.ndim else complex(out[0])


@dataclass
class DynamicsDecomposition:
    """Poles and cuts whose contributions sum to ``C(t)``."""

    kind: SelfEnergyKind
    delta: float
    poles: List[PoleContribution] = field(default_factory=list)
    cuts: List[BranchCutContribution] = field(default_factory=list)

    def amplitude(self, t):
        t = np.asarray(t, dtype=float)
        total = np.zeros(t.shape, dtype=complex)
        for p in self.poles:
            total = total + p.value_at(t)
        for c in self.cuts:
            total = total + c.value_at(t)
        return total

    def contributions_at(self, t=0.0):
        """Mapping from contribution label to its complex value at `t`."""
        out = {}
        for p in self.poles:
            label = p.kind if p.kind != "UP" else f"UP-{p.sheet.value}"
            out[label] = out.get(label, 0.0) + complex(p.value_at(t))
        for c in self.cuts:
            out[c.cut] = complex(c.value_at(t))
        return out

    def completeness(self) -> complex:
        return complex(self.amplitude(0.0))


# ----------------------------------------------------------------------------
# Bound states
# ----------------------------------------------------------------------------

_U_MIN = 1e-300
_U_MAX = 1e4


def _edge_F(kind: SelfEnergyKind, delta, edge, u):
    B = kind.band_edge
    E = edge * (B + u * kind.J)
    sig = complex(kind.near_edge(u, edge, Sheet.I)).real
    return E - delta - sig


def _edge_residue(kind, edge, u):
    radius = 0.25 * u
    d_du = cauchy_derivative(lambda uu: kind.near_edge(uu, edge, Sheet.I), complex(u), radius)
    dsig_dE = d_du / (edge * kind.J)
    return 1.0 / (1.0 - dsig_dE)


def _bound_state(kind, delta, edge) -> Optional[PoleContribution]:
    label = "LBS" if edge < 0 else "UBS"
    # F is monotone outside the band; the root is bracketed by u in (0, inf)
    f_far = _edge_F(kind, delta, edge, _U_MAX)
    f_near = _edge_F(kind, delta, edge, _U_MIN)
    if np.sign(f_far) == np.sign(f_near) or f_near == 0.0:
        if kind.dim == 2 and kind.edge_log_coefficient(edge) > 0 and np.sign(f_far) == edge:
            # root closer to the edge than double precision can resolve:
            # Sigma ~ edge * c g^2/(4 pi J) log(1/u) + A
            c = kind.edge_log_coefficient(edge) * kind.g**2 / (4.0 * np.pi * kind.J)
            u0 = 1e-250
            A = complex(kind.near_edge(u0, edge, Sheet.I)).real - edge * c * np.log(1.0 / u0)
            E0 = edge * kind.band_edge
            log_inv_u = edge * (E0 - delta - A) / c
            return PoleContribution(label, Sheet.I, complex(E0), 0.0 + 0.0j, log_u=-log_inv_u)
        return None
    s = optimize.brentq(
        lambda lu: _edge_F(kind, delta, edge, math.exp(lu)),
        math.log(_U_MIN),
        math.log(_U_MAX),
        xtol=1e-14,
        rtol=1e-15,
        maxiter=500,
    )
    u = math.exp(s)
    E = edge * (kind.band_edge + u * kind.J)
    R = _edge_residue(kind, edge, u)
    return PoleContribution(label, Sheet.I, complex(E), R, log_u=s)


def find_bound_states(kind: SelfEnergyKind, delta: float) -> List[PoleContribution]:
    """Real poles below and above the band on the physical sheet.

    Solves ``E = Delta + Sigma(E)`` outside the band by bracketing in the log
    of the distance to the edge, so bound states exponentially close to an
    edge are resolved. Residues are ``1/(1 - Sigma'(E))``.
    """
    out = []
    for edge in (-1, 1):
        bs = _bound_state(kind, delta, edge)
        if bs is not None:
            out.append(bs)
    return out


# ----------------------------------------------------------------------------
# Unstable poles
# ----------------------------------------------------------------------------


def _sheet_domain(kind, sheet):
    B = kind.band_edge
    if kind.dim == 1:
        return -B, B
    return (-B, 0.0) if sheet is Sheet.II else (0.0, B)


def _newton(f, z0, tol=1e-13, maxiter=80):
    """Secant iteration in the complex plane; returns ``None`` on failure."""
    z_prev = z0
    z = z0 * (1 + 1e-4) + 1e-6j * (1 + abs(z0))
    f_prev = f(z_prev)
    for _ in range(maxiter):
        try:
            fz = f(z)
        except (DomainError, FloatingPointError, ZeroDivisionError):
            return None
        if not np.isfinite(fz):
            return None
        if abs(fz) < tol:
            return z
        denom = fz - f_prev
        if denom == 0:
            return None
        step = fz * (z - z_prev) / denom
        # damp very long steps
        if abs(step) > 0.5 * (abs(z) + 0.1):
            step *= 0.5 * (abs(z) + 0.1) / abs(step)
        z_prev, f_prev = z, fz
        z = z - step
        if abs(step) < 1e-15 * (1 + abs(z)):
            return z
    return None


def _up_seeds(kind, delta, sheet):
    lo, hi = _sheet_domain(kind, sheet)
    g2 = kind.g**2 / kind.J
    seeds = []
    try:
        s0 = complex(kind.retarded(delta)) if lo < delta < hi or kind.dim == 1 else None
    except DomainError:
        s0 = None
    scale = g2
    if s0 is not None and np.isfinite(s0):
        seeds.append(delta + s0)
        scale = max(abs(s0), g2 * 0.05)
    if kind.dim == 2:
        gb = gamma_bar_e(kind.g, kind.J)
        mid = 0.5 * (lo + hi)
        side = -1.0 if sheet is Sheet.II else 1.0
        for shift in (0.25, 0.5, 1.0):
            seeds.append(delta + side * shift * g2 - 0.5j * gb)
            seeds.append(side * shift * g2 - 0.5j * gb)
        seeds.append(delta - 0.5j * gb)
        seeds.append(mid - 0.5j * g2)
    for f in (0.5, 2.0):
        seeds.append(delta - 1j * f * scale)
    # move seeds into the sheet's strip, below the real axis
    out = []
    width = hi - lo
    for z in seeds:
        re = min(max(z.real, lo + 1e-3 * width), hi - 1e-3 * width)
        im = min(z.imag, -1e-6 * (1 + g2))
        out.append(complex(re, im))
    return out


def _accept(kind, z, sheet, delta, tol):
    lo, hi = _sheet_domain(kind, sheet)
    if not (lo < z.real < hi) or z.imag > tol:
        return False
    resid = abs(z - delta - complex(kind(z, sheet)))
    return resid < 1e-10 * kind.J * max(1.0, abs(z))


def _polish_real(kind, delta, z, sheet):
    """Snap a numerically real pole onto the axis when that is exact."""
    if abs(z.imag) > 1e-9 * kind.J:
        return z
    zr = complex(z.real, 0.0)
    try:
        if abs(zr - delta - complex(kind(zr, sheet))) < 1e-10 * kind.J:
            return zr
    except DomainError:
        pass
    return z


def _chain_polynomial(kind, delta):
    """Coefficients in ``y`` of the chain pole equation, highest power first.

    With ``z = -J(y + 1/y)`` the square root becomes ``J(y - 1/y)`` and the
    pole equation turns into a polynomial; ``|y| < 1`` is sheet I.
    """
    d = delta / kind.J
    gg = (kind.g / kind.J) ** 2
    n = 0 if kind.tag == "Single1D" else abs(kind.n12)
    deg = max(4, n + 2)
    c = np.zeros(deg + 1, dtype=float)  # c[k] multiplies y**k

    def add(k, v):
        c[k] += v

    # -(y^2 + 1)(y^2 - 1) - d y (y^2 - 1)
    add(4, -1.0)
    add(0, 1.0)
    add(3, -d)
    add(1, d)
    # -gg y^2 h(y)
    if kind.tag == "Single1D":
        add(2, -gg)
    elif kind.tag == "Pair1D":
        add(n + 2, -gg)
    else:
        add(2, -gg)
        add(n + 2, -gg * kind.sign)
    return c[::-1]


def _chain_poles(kind, delta):
    """All crossed complex or in-band poles of the chain Green function."""
    roots = np.roots(_chain_polynomial(kind, delta))
    B = kind.band_edge
    out = []
    for y in roots:
        if abs(y) == 0:
            continue
        z = -kind.J * (y + 1.0 / y)
        sheet = Sheet.I if abs(y) < 1.0 else Sheet.II
        if abs(abs(y) - 1.0) < 1e-6:
            sheet = Sheet.II
        if abs(abs(z.real) - B) < 1e-9 * kind.J and abs(z.imag) < 1e-9 * kind.J:
            continue  # edge root of the multiplied-out polynomial
        f = lambda w, s=sheet: w - delta - complex(kind(w, s))
        polished = _newton(f, complex(z))
        if polished is not None and abs(polished - z) < 1e-6 * (1 + abs(z)):
            z = polished
        z = _polish_real(kind, delta, z, sheet)
        if sheet is Sheet.I and (z.imag >= 0 or abs(z.imag) < 1e-12 * kind.J):
            continue  # real sheet-I roots are bound states
        if sheet is Sheet.II and (not (-B < z.real < B) or z.imag > 1e-12 * kind.J):
            continue
        if abs(z - delta - complex(kind(z, sheet))) > 1e-10 * kind.J * max(1.0, abs(z)):
            continue
        out.append((z, sheet))
    return out


def _vector_F(kind, delta, z, sheet):
    try:
        return z - delta - np.asarray(kind(z, sheet), dtype=complex)
    except (DomainError, RecursionError_):
        out = np.full(z.shape, np.nan, dtype=complex)
        for i, w in enumerate(z):
            try:
                out[i] = w - delta - complex(kind(w, sheet))
            except (DomainError, RecursionError_):
                pass
        return out


def _grid_roots(kind, delta, sheet, n_re=12, n_im=30, depth=1e3, maxiter=80):
    """Candidate roots from a vectorised secant run over a seed grid.

    The grid spans the sheet's strip and depths down to ``depth * J`` on a
    log scale, which reaches the deep poles that the continued self-energy
    of distant pairs produces.
    """
    lo, hi = _sheet_domain(kind, sheet)
    re = np.linspace(lo, hi, n_re + 2)[1:-1]
    im = -np.logspace(-6, np.log10(depth), n_im) * kind.J
    z_prev = (re[:, None] + 1j * im[None, :]).ravel()
    z = z_prev * (1 + 1e-4) + 1e-6j * (1 + np.abs(z_prev))
    with np.errstate(all="ignore"):
        f_prev = _vector_F(kind, delta, z_prev, sheet)
        for _ in range(maxiter):
            fz = _vector_F(kind, delta, z, sheet)
            step = fz * (z - z_prev) / (fz - f_prev)
            step = np.where(np.isfinite(step), step, 0.0)
            cap = 0.5 * (np.abs(z) + 0.1)
            big = np.abs(step) > cap
            step[big] *= cap[big] / np.abs(step[big])
            z_prev, f_prev = z, fz
            z = z - step
        fz = _vector_F(kind, delta, z, sheet)
    ok = np.isfinite(fz) & (np.abs(fz) < 1e-8 * kind.J * np.maximum(1.0, np.abs(z)))
    ok &= (z.real > lo) & (z.real < hi) & (z.imag <= 1e-9 * kind.J)
    out = []
    for w in z[ok]:
        if all(abs(w - v) > 1e-7 * (1 + abs(w)) for v in out):
            out.append(complex(w))
    return out


def find_unstable_poles(kind: SelfEnergyKind, delta: float, extra_seeds: Sequence[complex] = ()) -> List[PoleContribution]:
    """Complex poles on the continued sheets inside their strips.

    Every root of ``z = Delta + Sigma^S(z)`` with ``Re z`` in the strip of
    sheet ``S`` and ``Im z <= 0`` is returned; physical selection is left to
    the completeness of the full decomposition. On the chain all roots come
    from one polynomial, so none can be missed; on the square lattice the
    search is seeded per sheet.
    """
    found: List[PoleContribution] = []
    if kind.dim == 1:
        for z, sheet in _chain_poles(kind, delta):
            if any(abs(z - p.z) < 1e-8 * (1 + abs(z)) for p in found):
                continue
            found.append(PoleContribution("UP", sheet, z, _pole_residue(kind, z, sheet)))
        found.sort(key=lambda p: p.z.real)
        return found
    for sheet in kind.sheets:
        f = lambda z, s=sheet: z - delta - complex(kind(z, s))
        seeds = list(_up_seeds(kind, delta, sheet)) + list(extra_seeds)
        for seed in seeds + _grid_roots(kind, delta, sheet):
            root = _newton(f, seed)
            if root is None:
                continue
            root = _polish_real(kind, delta, root, sheet)
            if not _accept(kind, root, sheet, delta, 1e-12 * kind.J):
                continue
            if any(abs(root - p.z) < 1e-8 * (1 + abs(root)) for p in found):
                continue
            R = _pole_residue(kind, root, sheet)
            found.append(PoleContribution("UP", sheet, root, R))
    found.sort(key=lambda p: p.z.real)
    return found


def axis_poles(kind: SelfEnergyKind, delta: float, rel_tol: float = 1e-2) -> List[PoleContribution]:
    """Pure-imaginary poles sitting on the middle cut ``Re z = 0``.

    For antisymmetric pairs with even ``nx + ny`` at ``Delta = 0`` the real
    parts of the two continuations are opposite on the imaginary axis and
    tiny, so each sheet's root lies a hair outside its own strip. Those roots
    are not part of the decomposition (the middle-cut integral carries their
    weight) but they are the subradiant poles of the pair. Here the real part
    is dropped and ``-y = Im Sigma^S(-iy)`` is solved for ``y > 0``; a root
    is kept only if ``|Delta + Re Sigma^S(-iy)| <= rel_tol * y``.
    """
    if kind.dim != 2:
        return []
    out: List[PoleContribution] = []
    for sheet in kind.sheets:
        x0 = -1e-300 if sheet is Sheet.II else 1e-300
        sig = lambda y, s=sheet, x=x0: complex(kind(complex(x, -y), s))
        h = lambda ly: math.exp(ly) + sig(math.exp(ly)).imag
        grid = np.linspace(math.log(1e-12 * kind.J), math.log(10.0 * kind.J), 120)
        vals = [h(v) for v in grid]
        for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
                continue
            y = math.exp(optimize.brentq(h, a, b, xtol=1e-15, rtol=1e-14))
            if abs(delta + sig(y).real) > rel_tol * y:
                continue
            z = complex(x0, -y)
            # derivative along the axis, dz = -i dy; fourth-order differences
            hy = 1e-3 * y
            dsig = (8 * (sig(y + hy) - sig(y - hy)) - (sig(y + 2 * hy) - sig(y - 2 * hy))) / (12 * hy)
            out.append(PoleContribution("UP", sheet, z, 1.0 / (1.0 - 1j * dsig)))
    return out


def _pole_residue(kind, z, sheet):
    if z.imag == 0.0:
        # real pole inside the band: only the lower half disc is on this sheet
        radius = 0.25 * _real_radius(kind, z)
        d = _half_disc_derivative(kind, z, sheet, radius)
        for _ in range(30):
            radius *= 0.5
            d_new = _half_disc_derivative(kind, z, sheet, radius)
            if abs(d_new - d) <= 1e-12 * max(1.0, abs(d_new)):
                d = d_new
                break
            d = d_new
    else:
        d = kind.derivative(z, sheet)
    return 1.0 / (1.0 - d)


def _real_radius(kind, z):
    B = kind.band_edge
    d = min(abs(z.real - B), abs(z.real + B))
    if kind.dim == 2:
        d = min(d, abs(z.real)) if z.real != 0 else d
    return d


def _half_disc_derivative(kind, z, sheet, radius):
    # sheet-I values above the axis continue the sheet-II values below it
    def f(w):
        w = np.asarray(w)
        up = w.imag > 0
        out = np.empty(w.shape, dtype=complex)
        if np.any(up):
            out[up] = kind(w[up], Sheet.I)
        if np.any(~up):
            out[~up] = kind(w[~up], sheet)
        return out

    return cauchy_derivative(f, z, radius)


# ----------------------------------------------------------------------------
# Branch cuts
# ----------------------------------------------------------------------------

_CUT_SIDES_2D = {
    "LBC": (Sheet.I, Sheet.II),
    "MBC": (Sheet.II, Sheet.III),
    "UBC": (Sheet.III, Sheet.I),
}
_CUT_SIDES_1D = {"LBC": (Sheet.I, Sheet.II), "UBC": (Sheet.II, Sheet.I)}


def _cut_x0(kind, cut):
    return {"LBC": -kind.band_edge, "MBC": 0.0, "UBC": kind.band_edge}[cut]


def _gl_panels(lo, hi, order):
    """Gauss-Legendre nodes in ``s = log y`` for panels ``[lo_i, hi_i]``."""
    xg, wg = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    s = mid[:, None] + half[:, None] * xg[None, :]
    w = half[:, None] * wg[None, :]
    y = np.exp(s)
    return y, w * y


def _adaptive_cut_nodes(f, y_min, y_max, panel_width, order, tol, max_level=40):
    """Bisect panels in ``log y`` until each agrees with its two halves.

    Returns the nodes, weights and samples of the accepted half panels and
    the summed disagreement as an error estimate.
    """
    s_lo, s_hi = math.log(y_min), math.log(y_max)
    n0 = max(1, int(math.ceil((s_hi - s_lo) / panel_width)))
    edges = np.linspace(s_lo, s_hi, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    y, w = _gl_panels(lo, hi, order)
    coarse = np.sum(w * f(y.ravel()).reshape(y.shape), axis=1)
    keep_y, keep_w, keep_f = [], [], []
    err = 0.0
    for _ in range(max_level):
        mid = 0.5 * (lo + hi)
        y2, w2 = _gl_panels(np.concatenate([lo, mid]), np.concatenate([mid, hi]), order)
        f2 = f(y2.ravel()).reshape(y2.shape)
        halves = np.sum(w2 * f2, axis=1)
        n = len(lo)
        left, right = halves[:n], halves[n:]
        diff = np.abs(left + right - coarse)
        ok = diff <= tol
        for sel in (slice(0, n), slice(n, 2 * n)):
            keep_y.append(y2[sel][ok].ravel())
            keep_w.append(w2[sel][ok].ravel())
            keep_f.append(f2[sel][ok].ravel())
        err += float(np.sum(diff[ok]))
        if np.all(ok):
            break
        bad = ~ok
        lo = np.concatenate([lo[bad], mid[bad]])
        hi = np.concatenate([mid[bad], hi[bad]])
        coarse = np.concatenate([left[bad], right[bad]])
    else:
        err += float(np.sum(diff[~ok]))
        for sel in (slice(0, n), slice(n, 2 * n)):
            keep_y.append(y2[sel][~ok].ravel())
            keep_w.append(w2[sel][~ok].ravel())
            keep_f.append(f2[sel][~ok].ravel())
    y = np.concatenate(keep_y)
    order_idx = np.argsort(y)
    return y[order_idx], np.concatenate(keep_w)[order_idx], np.concatenate(keep_f)[order_idx], err


def _green_from(z, delta, sig):
    sig = np.asarray(sig, dtype=complex)
    with np.errstate(invalid="ignore", over="ignore"):
        g = 1.0 / (z - delta - sig)
    # a self-energy that overflows on a continued sheet means G -> 0
    return np.where(np.isfinite(sig), g, 0.0)


def _green(kind, delta, z, sheet):
    with np.errstate(invalid="ignore", over="ignore"):
        sig = kind(z, sheet)
    return _green_from(z, delta, sig)


def _cut_jump(kind, delta, cut, y):
    x0 = _cut_x0(kind, cut)
    left, right = (_CUT_SIDES_1D if kind.dim == 1 else _CUT_SIDES_2D)[cut]
    J = kind.J
    # offsets keep each side strictly inside its own strip; edge points
    # are exact via the edge-offset representation
    off = 1e-300
    if cut == "MBC":
        zl = -off - 1j * y
        zr = off - 1j * y
        gl = _green(kind, delta, zl, left)
        gr = _green(kind, delta, zr, right)
    else:
        edge = -1 if cut == "LBC" else 1
        # z = x0 - i y  <=>  u = (z - x0)/(edge J) along the edge representation
        u = (-1j * y) / (edge * J)
        z = x0 - 1j * y
        with np.errstate(invalid="ignore", over="ignore"):
            if cut == "UBC":
                sig_l = kind.near_edge(u - off, edge, left)
                sig_r = kind.near_edge(u + off, edge, right)
            else:
                sig_l = kind.near_edge(u + off, edge, left)
                sig_r = kind.near_edge(u - off, edge, right)
        gl = _green_from(z, delta, sig_l)
        gr = _green_from(z, delta, sig_r)
    return (gr - gl) / (2.0 * np.pi)


def branch_cut_contribution(
    kind: SelfEnergyKind,
    delta: float,
    cut: str,
    t=None,
    y_min: float = 1e-14,
    y_max: float = 1e12,
    panel_width: float = 0.5,
    order: int = 10,
    tol: float = 1e-14,
):
    """Detour integral along the vertical cut `cut` (``LBC``, ``MBC``, ``UBC``).

    Nodes are Gauss-Legendre panels in ``log y`` from `y_min` to `y_max`,
    bisected until each panel agrees with its halves to `tol`, which resolves
    poles lying next to the cut. One node set serves every ``t`` because
    ``exp(-y t)`` is smooth in ``log y``.

    Returns
    -------
    BranchCutContribution, or its value at `t` when `t` is given.
    """
    if kind.dim == 1 and cut == "MBC":
        raise ValueError("the chain has no band-centre cut")
    if not kind.closed_form:
        raise NotImplementedError("branch cuts need the self-energy on every sheet")
    y, w, jump, err = _adaptive_cut_nodes(
        lambda yy: _cut_jump(kind, delta, cut, yy), y_min, y_max, panel_width, order, tol
    )
    contrib = BranchCutContribution(cut, _cut_x0(kind, cut), y, w, jump, err)
    if t is None:
        return contrib
    return contrib.value_at(t)


# ----------------------------------------------------------------------------
# Assembly
# ----------------------------------------------------------------------------


def decompose(kind: SelfEnergyKind, delta: float) -> DynamicsDecomposition:
    """All pole and cut contributions for an emitter detuned by `delta`."""
    if kind.tag.startswith("Pair"):
        raise ValueError("the bare exchange term is not the self-energy of an emitter state")
    if kind.g == 0:
        raise ValueError("a free emitter has no decomposition; C(t) = exp(-i Delta t)")
    dec = DynamicsDecomposition(kind, float(delta))
    dec.poles.extend(find_bound_states(kind, delta))
    dec.poles.extend(find_unstable_poles(kind, delta))
    cuts = ("LBC", "UBC") if kind.dim == 1 else ("LBC", "MBC", "UBC")
    for cut in cuts:
        dec.cuts.append(branch_cut_contribution(kind, delta, cut))
    return dec


def amplitude(kind: SelfEnergyKind, delta: float, t, decomposition: Optional[DynamicsDecomposition] = None):
    """``C(t)`` as the sum of pole and branch-cut contributions."""
    if kind.g == 0:
        return np.exp(-1j * delta * np.asarray(t, dtype=float))
    dec = decompose(kind, delta) if decomposition is None else decomposition
    return dec.amplitude(t)


def amplitude_fourier(kind: SelfEnergyKind, delta: float, t, eps: float = 2e-3, e_max: float = 40.0, h: Optional[float] = None):
    """``C(t)`` by windowed Fourier inversion of ``G(E + i eps)``.

    The free propagator ``1/(E + i eps - Delta)`` is subtracted and added
    back exactly, which leaves a remainder decaying like ``E**-3``. The
    result is multiplied by ``exp(eps t)`` to undo the damping. Meant as an
    independent check on :func:`amplitude`.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if h is None:
        h = eps / 8.0
    B = kind.band_edge
    E = np.arange(-e_max * kind.J - B, e_max * kind.J + B + h, h)
    z = E + 1j * eps
    G = 1.0 / (z - delta - np.asarray(kind(z, Sheet.I), dtype=complex))
    rem = G - 1.0 / (z - delta)
    out = np.empty(t.shape, dtype=complex)
    wts = np.full(E.shape, h)
    wts[0] = wts[-1] = 0.5 * h
    for i, ti in enumerate(t):
        integral = np.sum(wts * rem * np.exp(-1j * E * ti))
        out[i] = np.exp(eps * ti) * (1j / (2.0 * np.pi) * integral) + np.exp(-1j * delta * ti)
    return out if out.size > 1 else complex(out[0])


# ----------------------------------------------------------------------------
# Markov limit and closed forms
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class MarkovRate:
    """Single-pole prediction; `divergent` flags the van Hove point."""

    delta_omega: float
    gamma: float
    divergent: bool = False


def _centre_log_coefficient(kind):
    # saddle points (pi, 0) and (0, pi) carry the band-centre divergence
    if kind.tag == "Single2D":
        return 1.0
    if kind.tag == "Four2D":
        return 0.0
    ph = 0.5 * ((-1.0) ** kind.n12[0] + (-1.0) ** kind.n12[1])
    return ph if kind.tag == "Pair2D" else 1.0 + kind.sign * ph


def markov_rate(kind: SelfEnergyKind, delta: float) -> MarkovRate:
    """``delta_omega = Re Sigma(Delta + i0)``, ``Gamma = -2 Im Sigma(Delta + i0)``."""
    if kind.dim == 2 and delta == 0.0 and _centre_log_coefficient(kind) != 0.0:
        return MarkovRate(float("nan"), float("inf"), True)
    if kind.dim == 1 and abs(delta) == kind.band_edge:
        return MarkovRate(float("nan"), float("inf"), True)
    if kind.dim == 2 and delta == 0.0:
        # finite centre value of a combination whose log divergence cancels
        delta = 1e-14 * kind.J
    try:
        s = complex(kind.retarded(delta))
    except DomainError:
        return MarkovRate(float("nan"), float("inf"), True)
    if not np.isfinite(s):
        return MarkovRate(float("nan"), float("inf"), True)
    # outside the band the retarded boundary value is real
    gamma = -2.0 * s.imag if abs(delta) < kind.band_edge else 0.0
    return MarkovRate(s.real, gamma)


def bound_state_energy_lambert(g, delta, J=1.0, edge=-1):
    """Approximate square-lattice bound-state energy via the Lambert function."""
    c = g * g / (4.0 * np.pi * J)
    if edge < 0:
        arg = 128.0 * J * J * np.pi / (g * g) * np.exp(-4.0 * J * np.pi * (delta + 4.0 * J) / (g * g))
        return -4.0 * J - c * lambert_w0(arg)
    arg = 128.0 * J * J * np.pi / (g * g) * np.exp(-4.0 * J * np.pi * (4.0 * J - delta) / (g * g))
    return 4.0 * J + c * lambert_w0(arg)


def gamma_bar_e(g, J=1.0):
    """Renormalised band-centre decay rate ``(g^2/pi J) W(32 pi J^2/g^2)``."""
    return g * g / (np.pi * J) * lambert_w0(32.0 * np.pi * J * J / (g * g))


def gamma_sb_asymptote(g, n, J=1.0):
    """Large-distance subradiant rate ``(g^2/pi J)(gamma_E + log 8n)``."""
    return g * g / (np.pi * J) * (EULER_GAMMA + np.log(8.0 * n))


def c4_infinity(g, n, J=1.0):
    """Steady-state amplitude of the four-emitter subradiant mode."""
    return 1.0 / (1.0 + (g * n / J) ** 2)


def r_sb_1d(g, delta, n12, J=1.0):
    """Residue of the perfectly subradiant chain pole, with retardation."""
    if not abs(delta) < 2.0 * J:
        raise ValueError("r_sb_1d requires |delta| < 2J")
    v = math.sqrt(4.0 * J * J - delta * delta)
    gamma_e = 2.0 * g * g / v
    return 1.0 / (1.0 + n12 * gamma_e / (2.0 * v))


def closed_forms(g, J=1.0, **params):
    """Bundle of closed-form predictions for the given parameters.

    Recognised keyword arguments: ``delta`` (bound-state energies and the
    chain subradiant residue), ``n`` (subradiant asymptote and four-emitter
    steady state), ``n12`` (chain subradiant residue).
    """
    out = {"gamma_bar_e": gamma_bar_e(g, J)}
    delta = params.get("delta")
    n = params.get("n")
    n12 = params.get("n12")
    if delta is not None:
        out["E_LBS"] = bound_state_energy_lambert(g, delta, J, -1)
        out["E_UBS"] = bound_state_energy_lambert(g, delta, J, 1)
    if n is not None:
        out["gamma_sb"] = gamma_sb_asymptote(g, n, J)
        out["C4_inf"] = c4_infinity(g, n, J)
    if n12 is not None and (delta is None or abs(delta) < 2.0 * J):
        out["R_sb_1d"] = r_sb_1d(g, 0.0 if delta is None else delta, n12, J)
    return out


def _sub2_rhs(y, n):
    """``int_0^pi sin^2(2nq) / (y sqrt(y^2 + cos^2 q)) dq``."""
    f = lambda q: 1.0 / (y * np.sqrt(y * y + np.cos(q) ** 2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        # sin^2 = (1 - cos 4nq)/2; the oscillatory half by a Fourier-weighted rule
        pts = [np.pi / 2]
        base = sum(
            integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-12, limit=400)[0]
            for lo, hi in ((0.0, pts[0]), (pts[0], np.pi))
        )
        osc = sum(
            integrate.quad(f, lo, hi, weight="cos", wvar=4.0 * n, epsabs=0, epsrel=1e-12, limit=800)[0]
            for lo, hi in ((0.0, pts[0]), (pts[0], np.pi))
        )
    return 0.5 * (base - osc)


def subradiant_pole_2d(g, n, J=1.0):
    """Decay rate of the subradiant pair at ``n12 = (2n, 2n)``, ``Delta = 0``.

    Solves ``8 pi (J/g)^2 = int_0^pi sin^2(2nq)/(y sqrt(y^2 + cos^2 q)) dq``
    for ``y > 0``; the pole sits at ``z = -4 i J y`` so the rate is ``8 J y``.
    """
    if not g < J:
        raise ValueError("requires g < J")
    target = 8.0 * np.pi * (J / g) ** 2
    F = lambda ly: _sub2_rhs(math.exp(ly), n) - target
    lo, hi = math.log(1e-14), math.log(10.0)
    if F(lo) < 0 or F(hi) > 0:
        raise PoleSearchError("subradiant pole not bracketed")
    ly = optimize.brentq(F, lo, hi, xtol=1e-14, rtol=1e-13)
    return 8.0 * J * math.exp(ly)
