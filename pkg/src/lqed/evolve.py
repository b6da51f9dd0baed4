"""Time evolution in the single-excitation sector.

The split-step map alternates the diagonal free evolution of emitters and
bath with the exact 2x2 rotation that couples each emitter to its bath site.
Two backends produce the same discrete map:

``"fft"``
    Stores the full bath in momentum space and moves to position space with
    an FFT pair every step, ``O(N^dim log N)`` per step.
``"kernel"``
    Between interactions the bath evolves freely, so its amplitude at the
    emitter sites is a sum over the injected amplitudes of the previous steps
    weighted by the finite-lattice propagator
    ``K(d, s) = prod_i sum_l i^(d_i + lN) J_(d_i + lN)(2Js)``.
    The cost is ``O(steps^2 N_e^2)`` and independent of ``N``; bath grids are
    rebuilt on request from the same history.

Time is in units of ``1/J`` when ``J = 1``; all rates carry the units of ``J``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .bath import BathModel, dos

__all__ = [
    "WraparoundWarning",
    "WraparoundError",
    "SingleExcitationState",
    "EvolveConfig",
    "Snapshot",
    "Trajectory",
    "LossTrajectory",
    "split_step_evolve",
    "propagate",
    "freq_binned_evolve",
    "binned_bath",
    "apply_loss",
    "extract_decay_rate",
    "snapshot",
    "lattice_propagator",
]

_WRAP_MARGIN = 5
_WRAP_THRESHOLD = 1e-4


class WraparoundWarning(RuntimeWarning):
    """Emitted light has reached the periodic image of an emitter."""


class WraparoundError(RuntimeError):
    """Raised instead of :class:`WraparoundWarning` in strict runs."""


# ----------------------------------------------------------------------------
# Data types
# ----------------------------------------------------------------------------


@dataclass
class SingleExcitationState:
    """Emitter amplitudes plus the bath amplitudes on the full lattice.

    Parameters
    ----------
    emitters : ndarray
        Complex amplitude of each emitter.
    bath : ndarray
        Bath amplitudes of shape ``(N,) * dim``. In momentum representation
        the axes follow ``numpy.fft`` ordering; in position representation
        index ``n`` is lattice site ``n``.
    model : BathModel
    representation : {"momentum", "position"}
    time : float
    """

    emitters: np.ndarray
    bath: np.ndarray
    model: BathModel
    representation: str = "momentum"
    time: float = 0.0

    def __post_init__(self):
        self.emitters = np.asarray(self.emitters, dtype=complex).ravel()
        self.bath = np.asarray(self.bath, dtype=complex)
        if self.representation not in ("momentum", "position"):
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.bath.shape != (self.model.N,) * self.model.dim:
            raise ValueError("bath array does not match the lattice")

    @classmethod
    def vacuum_bath(cls, emitters, model: BathModel):
        return cls(emitters, np.zeros((model.N,) * model.dim, dtype=complex), model)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.emitters) ** 2) + np.sum(np.abs(self.bath) ** 2))

    def to(self, representation: str) -> "SingleExcitationState":
        """Unitary change of bath representation."""
        if representation == self.representation:
            return self
        if representation == "position":
            bath = np.fft.ifftn(self.bath, norm="ortho")
        elif representation == "momentum":
            bath = np.fft.fftn(self.bath, norm="ortho")
        else:
            raise ValueError(f"unknown representation {representation!r}")
        return SingleExcitationState(self.emitters.copy(), bath, self.model, representation, self.time)


@dataclass
class EvolveConfig:
    """Parameters of one split-step run.

    Parameters
    ----------
    bath : BathModel
        ``N`` must be a power of two.
    emitters : EmitterConfig
        Any object with ``g``, ``delta`` and ``positions`` (integer offsets
        from the lattice centre).
    initial : array_like or SingleExcitationState, optional
        Emitter amplitudes with an empty bath, or a full state. Defaults to
        the first emitter excited.
    dt : float
        Time step.
    t_max : float
        Final time, rounded up to a whole number of steps.
    snapshot_times : sequence of float
        Times at which the bath grid is stored; rounded to the nearest step.
    kappa, gamma_star : float
        Bath and emitter loss rates, applied through the non-Hermitian
        effective Hamiltonian.
    backend : {"kernel", "fft"}
    splitting : {"strang", "lie"}
        ``"lie"`` applies the free step first and the interaction second.
    sample_every : int
        Stride of stored samples.
    strict : bool
        Raise :class:`WraparoundError` instead of warning.
    """

    bath: BathModel
    emitters: object
    initial: object = None
    dt: float = 0.05
    t_max: float = 100.0
    snapshot_times: Sequence[float] = ()
    kappa: float = 0.0
    gamma_star: float = 0.0
    backend: str = "kernel"
    splitting: str = "strang"
    sample_every: int = 1
    strict: bool = False

    def __post_init__(self):
        N = self.bath.N
        if N & (N - 1):
            raise ValueError(f"N must be a power of two, got {N}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_max >= 0:
            raise ValueError("t_max must be non-negative")
        if self.kappa < 0 or self.gamma_star < 0:
            raise ValueError("loss rates must be non-negative")
        if self.backend not in ("kernel", "fft"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.splitting not in ("strang", "lie"):
            raise ValueError(f"unknown splitting {self.splitting!r}")
        if int(self.sample_every) < 1:
            raise ValueError("sample_every must be >= 1")
        pos = self.offsets
        if len({tuple(p) for p in pos}) != len(pos):
            raise ValueError("emitter positions must be distinct")
        if np.any(np.abs(pos) >= N // 2):
            raise ValueError("emitter positions must lie inside the lattice")
        amps = self.initial_amplitudes()
        if amps.shape != (len(pos),):
            raise ValueError("initial amplitudes do not match the emitter count")

    @property
    def offsets(self) -> np.ndarray:
        pos = np.asarray(self.emitters.positions, dtype=int)
        if self.bath.dim == 1 and pos.ndim == 1:
            pos = pos[:, None]
        if pos.ndim != 2 or pos.shape[1] != self.bath.dim:
            raise ValueError("emitter positions do not match the lattice dimension")
        return pos

    @property
    def sites(self) -> np.ndarray:
        """Lattice indices of the emitters, offsets from the centre ``N//2``."""
        return (self.offsets + self.bath.N // 2) % self.bath.N

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_max / self.dt - 1e-9))

    def initial_amplitudes(self) -> np.ndarray:
        if self.initial is None:
            amps = np.zeros(len(self.emitters.positions), dtype=complex)
            amps[0] = 1.0
            return amps
        if isinstance(self.initial, SingleExcitationState):
            return self.initial.emitters
        return np.asarray(self.initial, dtype=complex).ravel()

    def initial_state(self) -> SingleExcitationState:
        if isinstance(self.initial, SingleExcitationState):
            return self.initial.to("momentum")
        return SingleExcitationState.vacuum_bath(self.initial_amplitudes(), self.bath)


@dataclass
class Snapshot:
    """``|amplitude|^2`` of the bath on the lattice at one time.

    ``axes`` holds the coordinate of every index along each axis: site
    offsets from the lattice centre for positions, momenta in
    ``[-pi, pi)`` for momenta. Grids are row-major with axis 0 first.
    """

    space: str
    time: float
    grid: np.ndarray
    axes: Tuple[np.ndarray, ...]

    def total(self) -> float:
        return float(self.grid.sum())


@dataclass
class Trajectory:
    """Sampled emitter amplitudes and optional bath snapshots."""

    times: np.ndarray
    emitters: np.ndarray
    norms: np.ndarray
    config: Optional[EvolveConfig] = None
    snapshots: List[SingleExcitationState] = field(default_factory=list)
    final_state: Optional[SingleExcitationState] = None
    warnings: List[str] = field(default_factory=list)

    def populations(self) -> np.ndarray:
        return np.abs(self.emitters) ** 2

    def overlap(self, amplitudes=None) -> np.ndarray:
        """Projection ``<psi_e|C(t)>`` onto an emitter state (default: initial)."""
        if amplitudes is None:
            amplitudes = self.emitters[0]
        v = np.asarray(amplitudes, dtype=complex)
        v = v / np.linalg.norm(v)
        return self.emitters @ v.conj()

    def excited_population(self) -> np.ndarray:
        return self.populations().sum(axis=1)


# ----------------------------------------------------------------------------
# Lattice propagator
# ----------------------------------------------------------------------------


def _chain_kernel(d, s, N, J):
    """``<d| exp(-i H_B s) |0>`` on a periodic chain, by Bessel images."""
    d = np.asarray(d)
    s = np.asarray(s, dtype=float)
    x = 2.0 * J * np.abs(s)
    # images beyond the light cone are below double precision
    reach = x.max(initial=0.0) + 10.0 * np.cbrt(x.max(initial=0.0) + 1.0) + 40.0
    L = int(reach // N) + 1
    out = np.zeros(np.broadcast(d, s).shape, dtype=complex)
    for l in range(-L, L + 1):
        order = d + l * N
        if np.min(np.abs(order)) > reach:
            continue
        phase = 1j ** (order % 4)
        out += phase * special.jv(order, x)
    # negative times conjugate the propagator
    return np.where(s < 0, np.conj(out), out)


def lattice_propagator(model: BathModel, d, s):
    """Free propagator ``<n + d| exp(-i H_B s) |n>`` of the periodic lattice.

    Parameters
    ----------
    d : array_like of int
        Displacements, last axis of length ``dim`` in 2D.
    s : array_like of float
        Times; broadcast against the displacements.
    """
    d = np.asarray(d, dtype=int)
    if model.dim == 1:
        if d.ndim >= 1 and d.shape[-1] == 1:
            d = d[..., 0]
        return _chain_kernel(d, s, model.N, model.J)
    return _chain_kernel(d[..., 0], s, model.N, model.J) * _chain_kernel(d[..., 1], s, model.N, model.J)


def _chain_table(N, J, lags):
    """Propagator for every displacement ``0..N-1`` and lag, shape (N, lags)."""
    k = 2.0 * np.pi * np.fft.fftfreq(N)
    phase = np.exp(2j * J * np.outer(np.cos(k), lags))
    return np.fft.ifft(phase, axis=0)


# ----------------------------------------------------------------------------
# Split-step drivers
# ----------------------------------------------------------------------------


def _theta(splitting):
    # interaction instant within each step; Strang puts it at the midpoint
    return 0.5 if splitting == "strang" else 1.0


def _rotation(gdt):
    return math.cos(gdt), -1j * math.sin(gdt)


def _omega_grid(model: BathModel):
    k = 2.0 * np.pi * np.fft.fftfreq(model.N)
    w1 = -2.0 * model.J * np.cos(k)
    if model.dim == 1:
        return w1
    return w1[:, None] + w1[None, :]


def _wrap_mask(model: BathModel, sites):
    """Sites within the margin of the periodic image of any emitter."""
    N = model.N
    idx = np.arange(N)
    mask = np.zeros((N,) * model.dim, dtype=bool)
    for site in np.atleast_2d(sites):
        near = []
        for axis in range(model.dim):
            disp = (idx - site[axis] + N // 2) % N - N // 2
            near.append(np.abs(disp) >= N // 2 - _WRAP_MARGIN)
        if model.dim == 1:
            mask |= near[0]
        else:
            mask |= near[0][:, None] | near[1][None, :]
    return mask


def _report_wrap(pop, t, config, log):
    if pop <= _WRAP_THRESHOLD:
        return
    msg = f"bath population {pop:.3g} near the periodic boundary at t={t:.6g}; increase N"
    if config.strict:
        raise WraparoundError(msg)
    if msg not in log:
        log.append(msg)
        warnings.warn(msg, WraparoundWarning, stacklevel=3)


def _step_indices(config):
    M = config.n_steps
    stride = int(config.sample_every)
    keep = list(range(0, M + 1, stride))
    if keep[-1] != M:
        keep.append(M)
    snaps = sorted({min(M, max(0, int(round(t / config.dt)))) for t in config.snapshot_times})
    return M, keep, snaps


def _run_fft(config: EvolveConfig, state: SingleExcitationState, dt: float, n_steps: int, keep, snaps):
    model = config.bath
    em = config.emitters
    theta = _theta(config.splitting)
    w = _omega_grid(model) - 0.5j * config.kappa
    delta = em.delta - 0.5j * config.gamma_star
    P = np.exp(-1j * w * dt)
    P_in = np.exp(-1j * w * theta * dt)
    P_out = np.exp(-1j * w * (1.0 - theta) * dt)
    e_in = np.exp(-1j * delta * theta * dt)
    e_step = np.exp(-1j * delta * dt)
    e_out = np.exp(-1j * delta * (1.0 - theta) * dt)
    cr, sr = _rotation(em.g * dt)
    sites = tuple(config.sites.T)
    mask = _wrap_mask(model, config.sites)
    check_every = max(1, n_steps // 20)

    c = state.emitters.copy()
    C = state.bath.copy()
    times, amps, norms, snapshots, log = [], [], [], [], []

    def record(m, c_out, C_out):
        if m in keep_set:
            times.append(m * dt)
            amps.append(c_out.copy())
            norms.append(float(np.sum(np.abs(c_out) ** 2) + np.sum(np.abs(C_out) ** 2)))
        if m in snap_set:
            snapshots.append(SingleExcitationState(c_out.copy(), C_out.copy(), model, "momentum", m * dt))

    keep_set, snap_set = set(keep), set(snaps)
    record(0, c, C)
    c = c * e_in
    C = C * P_in
    for m in range(1, n_steps + 1):
        pos = np.fft.ifftn(C, norm="ortho")
        b = pos[sites]
        c, pos[sites] = cr * c + sr * b, sr * c + cr * b
        C = np.fft.fftn(pos, norm="ortho")
        if m in keep_set or m in snap_set or m == n_steps or m % check_every == 0:
            C_out = C * P_out
            c_out = c * e_out
            record(m, c_out, C_out)
            if m % check_every == 0 or m == n_steps:
                edge = np.abs(np.fft.ifftn(C_out, norm="ortho")[mask]) ** 2
                _report_wrap(float(edge.sum()), m * dt, config, log)
        c = c * e_step
        C = C * P
    final = SingleExcitationState(c * e_out / e_step, C * P_out / P, model, "momentum", n_steps * dt)
    return times, amps, norms, snapshots, final, log


class _KernelHistory:
    """Injected amplitudes per step and the emitter-site propagator table."""

    def __init__(self, config: EvolveConfig, dt: float, n_steps: int):
        self.config = config
        self.dt = dt
        sites = config.offsets
        diff = sites[:, None, :] - sites[None, :, :]
        lags = np.arange(n_steps + 1) * dt
        damp = np.exp(-0.5 * config.kappa * lags)
        model = config.bath
        K = np.empty((n_steps + 1, len(sites), len(sites)), dtype=complex)
        for i in range(len(sites)):
            for j in range(len(sites)):
                K[:, i, j] = lattice_propagator(model, np.broadcast_to(diff[i, j], (n_steps + 1, model.dim)), lags)
        self.K = K * damp[:, None, None]
        self.delta = np.zeros((n_steps + 1, len(sites)), dtype=complex)

    def site_amplitudes(self, m):
        """Bath amplitude at the emitter sites just before interaction ``m``."""
        if m <= 1:
            return np.zeros(self.delta.shape[1], dtype=complex)
        # sum over m' = 1..m-1 of K[m - m'] delta[m']
        Kr = self.K[m - 1 : 0 : -1]
        return np.einsum("sij,sj->i", Kr, self.delta[1:m])

    def bath_grid(self, m, extra_lag, rows=None, cols=None, min_lag=0.0):
        """Position-space bath after interaction ``m`` plus ``extra_lag``.

        `rows` and `cols` select a block of site indices (all by default).
        Injections younger than `min_lag` are skipped; callers use this when
        their wave front cannot have reached the block yet.
        """
        config = self.config
        model = config.bath
        N = model.N
        lags = (m - np.arange(1, m + 1)) * self.dt + extra_lag
        use = lags >= min_lag
        lags = lags[use]
        damp = np.exp(-0.5 * config.kappa * lags)
        table = _chain_table(N, model.J, lags)
        weights = self.delta[1 : m + 1][use] * damp[:, None]
        rows = np.arange(N) if rows is None else np.asarray(rows)
        cols = np.arange(N) if cols is None else np.asarray(cols)
        shape = (len(rows),) if model.dim == 1 else (len(rows), len(cols))
        grid = np.zeros(shape, dtype=complex)
        for j, site in enumerate(config.sites):
            w = weights[:, j]
            r0 = table[(rows - site[0]) % N]
            if model.dim == 1:
                grid += r0 @ w
            else:
                grid += (r0 * w[None, :]) @ table[(cols - site[1]) % N].T
        return grid

    def edge_population(self, m, extra_lag):
        """Bath population on the wraparound margin after interaction ``m``."""
        config = self.config
        model = config.bath
        N = model.N
        mask = _wrap_mask(model, config.sites)
        # only injections old enough for their front to reach the margin count
        reach = N // 2 - _WRAP_MARGIN - 2 * np.max(np.abs(config.offsets))
        s = np.arange(0.0, m * self.dt + extra_lag + self.dt, self.dt)
        front = 2.0 * model.J * s + 7.1 * np.cbrt(model.J * s + 1.0) + 10.0
        min_lag = s[np.argmax(front >= reach)] if np.any(front >= reach) else np.inf
        if model.dim == 1:
            rows = np.nonzero(mask)[0]
            return float(np.sum(np.abs(self.bath_grid(m, extra_lag, rows, min_lag=min_lag)) ** 2))
        X = np.nonzero(mask.all(axis=1))[0]
        Y = np.nonzero(mask.all(axis=0))[0]
        every = np.arange(N)
        a = np.sum(np.abs(self.bath_grid(m, extra_lag, X, every, min_lag)) ** 2)
        b = np.sum(np.abs(self.bath_grid(m, extra_lag, every, Y, min_lag)) ** 2)
        c = np.sum(np.abs(self.bath_grid(m, extra_lag, X, Y, min_lag)) ** 2)
        return float(a + b - c)


def _light_cone_clear(config, t):
    x = 2.0 * config.bath.J * t
    margin = 7.1 * np.cbrt(0.5 * x + 1.0) + 10.0
    spread = np.max(np.abs(config.offsets)) if len(config.offsets) else 0
    return x + margin + spread < config.bath.N // 2 - _WRAP_MARGIN - spread


def _run_kernel(config: EvolveConfig, state: SingleExcitationState, dt: float, n_steps: int, keep, snaps):
    if np.any(state.bath != 0):
        raise ValueError("the kernel backend starts from an empty bath; use backend='fft'")
    model = config.bath
    em = config.emitters
    theta = _theta(config.splitting)
    delta = em.delta - 0.5j * config.gamma_star
    e_in = np.exp(-1j * delta * theta * dt)
    e_step = np.exp(-1j * delta * dt)
    e_out = np.exp(-1j * delta * (1.0 - theta) * dt)
    bath_decay = math.exp(-config.kappa * dt)
    out_decay = math.exp(-config.kappa * (1.0 - theta) * dt)
    cr, sr = _rotation(em.g * dt)
    hist = _KernelHistory(config, dt, n_steps)

    keep_set, snap_set = set(keep), set(snaps)
    c = state.emitters.copy()
    bath_norm = 0.0
    times, amps, norms, snapshots, log = [], [], [], [], []
    times.append(0.0)
    amps.append(c.copy())
    norms.append(float(np.sum(np.abs(c) ** 2)))
    if 0 in snap_set:
        snapshots.append(SingleExcitationState(c.copy(), np.zeros((model.N,) * model.dim, complex), model, "momentum", 0.0))
    c = c * e_in
    for m in range(1, n_steps + 1):
        b = hist.site_amplitudes(m)
        c_new = cr * c + sr * b
        b_new = sr * c + cr * b
        hist.delta[m] = b_new - b
        bath_norm = bath_norm * bath_decay + float(np.sum(np.abs(b_new) ** 2 - np.abs(b) ** 2))
        c = c_new
        if m in keep_set:
            c_out = c * e_out
            times.append(m * dt)
            amps.append(c_out)
            norms.append(float(np.sum(np.abs(c_out) ** 2) + bath_norm * out_decay))
        if m in snap_set:
            pos = hist.bath_grid(m, (1.0 - theta) * dt)
            snapshots.append(SingleExcitationState(c * e_out, np.fft.fftn(pos, norm="ortho"), model, "momentum", m * dt))
        c = c * e_step
    final = None
    if not _light_cone_clear(config, n_steps * dt):
        _report_wrap(hist.edge_population(n_steps, (1.0 - theta) * dt), n_steps * dt, config, log)
    return times, amps, norms, snapshots, final, log


def split_step_evolve(config: EvolveConfig) -> Trajectory:
    """Split-step evolution of emitters coupled to a tight-binding bath.

    Each step applies the free phases ``exp(-i(Delta - i Gamma*/2) dt)`` and
    ``exp(-i(omega_k - i kappa/2) dt)``, and the exact rotation
    ``[[cos g dt, -i sin g dt], [-i sin g dt, cos g dt]]`` between every
    emitter and the bath amplitude on its site. Strang splitting halves the
    free step around the rotation; Lie splitting applies the full free step
    before it.

    Returns
    -------
    Trajectory
        Emitter amplitudes at the sampled times and the requested snapshots.
        The fft backend also returns the final full state.
    """
    M, keep, snaps = _step_indices(config)
    state = config.initial_state()
    runner = _run_fft if config.backend == "fft" else _run_kernel
    times, amps, norms, snapshots, final, log = runner(config, state, config.dt, M, keep, snaps)
    return Trajectory(
        times=np.asarray(times),
        emitters=np.asarray(amps),
        norms=np.asarray(norms),
        config=config,
        snapshots=snapshots,
        final_state=final,
        warnings=log,
    )


def propagate(state: SingleExcitationState, config: EvolveConfig, n_steps: int, dt: Optional[float] = None) -> SingleExcitationState:
    """Advance a full state by ``n_steps`` split steps on the FFT grid.

    `dt` may be negative; with Strang splitting ``propagate(propagate(s, c,
    n), c, n, -dt)`` returns ``s`` up to rounding.
    """
    dt = config.dt if dt is None else float(dt)
    cfg = replace(config, backend="fft", snapshot_times=(), initial=None)
    st = state.to("momentum")
    *_, final, _ = _run_fft(cfg, st, dt, n_steps, [0], [])
    final.time = state.time + n_steps * dt
    return final


# ----------------------------------------------------------------------------
# Frequency binning
# ----------------------------------------------------------------------------


def binned_bath(model: BathModel, g: float, d_omega: Optional[float] = None):
    """Bin centres and collective couplings of the frequency-binned bath.

    The coupling of bin ``n`` is ``g sqrt(W_n)`` with ``W_n`` the weight of
    the normalised density of states inside the bin, so ``sum_n g_n^2 = g^2``
    for every bin width. Bins with zero weight are dropped.
    """
    B = model.band_edge
    if d_omega is None:
        d_omega = 2.0 * B / 4096
    n_bins = int(round(2.0 * B / d_omega))
    if n_bins < 1 or abs(n_bins * d_omega - 2.0 * B) > 1e-9 * B:
        raise ValueError("d_omega must divide the band evenly")
    edges = np.linspace(-B, B, n_bins + 1)
    weights = _dos_weights(model, edges)
    centres = 0.5 * (edges[1:] + edges[:-1])
    keep = weights > 0
    return centres[keep], g * np.sqrt(weights[keep])


def _dos_weights(model: BathModel, edges):
    """Integrated density of states per bin, by the cumulative distribution."""
    if model.dim == 1:
        cdf = 0.5 + np.arcsin(np.clip(edges / model.band_edge, -1.0, 1.0)) / np.pi
        return np.diff(cdf)
    from scipy import integrate

    out = np.empty(len(edges) - 1)
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        pts = [0.0] if a < 0.0 < b else None
        out[i] = integrate.quad(lambda e: dos(model, e), a, b, points=pts, limit=200, epsabs=1e-15, epsrel=1e-12)[0]
    return out


def freq_binned_evolve(config: EvolveConfig, d_omega: Optional[float] = None, rate_hint: Optional[float] = None) -> Trajectory:
    """Single emitter coupled to one collective bath mode per energy bin.

    Uses the same Strang split-step as :func:`split_step_evolve`, with the
    free phases ``exp(-i omega_n dt)`` and an exact rotation between the
    emitter and the bright combination ``sum_n g_n a_n / G`` of the bins.
    Only the emitter amplitude is stored.
    """
    if len(config.emitters.positions) != 1:
        raise ValueError("frequency binning supports a single emitter")
    model = config.bath
    em = config.emitters
    centres, gn = binned_bath(model, em.g, d_omega)
    width = centres[1] - centres[0] if len(centres) > 1 else 2.0 * model.band_edge
    if rate_hint is not None and width > rate_hint / 10.0:
        warnings.warn(f"bin width {width:.3g} exceeds a tenth of the rate {rate_hint:.3g}", RuntimeWarning, stacklevel=2)
    G = math.sqrt(float(np.sum(gn**2)))
    u = gn / G if G > 0 else gn
    dt = config.dt
    theta = _theta(config.splitting)
    delta = em.delta - 0.5j * config.gamma_star
    w = centres - 0.5j * config.kappa
    M, keep, _ = _step_indices(config)
    keep_set = set(keep)
    cr, sr = _rotation(G * dt)
    c = complex(config.initial_amplitudes()[0])
    a = np.zeros(len(centres), dtype=complex)
    times, amps, norms = [0.0], [c], [abs(c) ** 2]
    c *= np.exp(-1j * delta * theta * dt)
    a *= np.exp(-1j * w * theta * dt)
    e_step, P = np.exp(-1j * delta * dt), np.exp(-1j * w * dt)
    e_out, P_out = np.exp(-1j * delta * (1 - theta) * dt), np.exp(-1j * w * (1 - theta) * dt)
    for m in range(1, M + 1):
        b = np.dot(u, a)
        c, b_new = cr * c + sr * b, sr * c + cr * b
        a = a + u * (b_new - b)
        if m in keep_set:
            c_out = c * e_out
            times.append(m * dt)
            amps.append(c_out)
            norms.append(abs(c_out) ** 2 + float(np.sum(np.abs(a * P_out) ** 2)))
        c *= e_step
        a *= P
    return Trajectory(np.asarray(times), np.asarray(amps)[:, None], np.asarray(norms), config)


# ----------------------------------------------------------------------------
# Losses
# ----------------------------------------------------------------------------


@dataclass
class LossTrajectory:
    """Populations of the lossy single-excitation density matrix.

    ``emitters`` holds ``|C_e^j(t)|^2``, ``bath`` the total bath population
    and ``vacuum`` the weight of the ground state reached by quantum jumps.
    """

    times: np.ndarray
    emitters: np.ndarray
    bath: np.ndarray
    vacuum: np.ndarray
    amplitudes: Optional[np.ndarray] = None


def apply_loss(trajectory: Trajectory, kappa: float, gamma_star: float) -> LossTrajectory:
    """Add bath loss ``kappa`` and emitter loss ``gamma_star`` to a run.

    With equal rates the effective Hamiltonian differs from the lossless one
    by a multiple of the identity, so populations are the lossless ones
    scaled by ``exp(-kappa t)`` and the remaining weight sits in the vacuum.
    Otherwise the run is repeated with the non-Hermitian free phases and the
    jump weight is ``1 - norm^2``.
    """
    if kappa < 0 or gamma_star < 0:
        raise ValueError("loss rates must be non-negative")
    cfg = trajectory.config
    if cfg is not None and (cfg.kappa or cfg.gamma_star):
        raise ValueError("apply_loss expects a lossless trajectory")
    t = trajectory.times
    pops = trajectory.populations()
    if kappa == gamma_star:
        f = np.exp(-kappa * t)
        em = pops * f[:, None]
        bath = (trajectory.norms - pops.sum(axis=1)) * f
        return LossTrajectory(t, em, bath, 1.0 - em.sum(axis=1) - bath, trajectory.emitters * np.sqrt(f)[:, None])
    if cfg is None:
        raise ValueError("unequal loss rates need the run configuration")
    lossy = split_step_evolve(replace(cfg, kappa=kappa, gamma_star=gamma_star, snapshot_times=()))
    em = lossy.populations()
    bath = lossy.norms - em.sum(axis=1)
    return LossTrajectory(lossy.times, em, bath, 1.0 - lossy.norms, lossy.emitters)


# ----------------------------------------------------------------------------
# Observables
# ----------------------------------------------------------------------------


def extract_decay_rate(trajectory, population=None, level=math.exp(-1.0)) -> float:
    """Inverse of the first time the population falls to ``1/e``.

    Parameters
    ----------
    trajectory : Trajectory or ndarray
        A trajectory (the overlap with the initial emitter state is used) or
        an array of sample times.
    population : ndarray, optional
        Population samples when `trajectory` is an array of times.

    Raises
    ------
    ValueError
        If the population never crosses the level.
    """
    if isinstance(trajectory, Trajectory):
        t = trajectory.times
        p = np.abs(trajectory.overlap()) ** 2 if population is None else np.asarray(population)
    else:
        t = np.asarray(trajectory, dtype=float)
        p = np.asarray(population, dtype=float)
    below = np.nonzero(p <= level)[0]
    if len(below) == 0 or below[0] == 0:
        raise ValueError("population never crosses the level")
    i = below[0]
    t0, t1, p0, p1 = t[i - 1], t[i], p[i - 1], p[i]
    t_star = t0 + (p0 - level) * (t1 - t0) / (p0 - p1)
    return 1.0 / t_star


def snapshot(state: SingleExcitationState, space: str = "position") -> Snapshot:
    """Bath ``|amplitude|^2`` grid in position or momentum space.

    Position grids are indexed by site offset from the lattice centre and
    momentum grids by ``k`` in ``[-pi, pi)``, both in increasing order.
    """
    model = state.model
    N = model.N
    if space == "position":
        # site index n holds offset n - N//2
        grid = np.abs(state.to("position").bath) ** 2
        ax = np.arange(N) - N // 2
    elif space == "momentum":
        grid = np.fft.fftshift(np.abs(state.to("momentum").bath) ** 2)
        ax = model.k_axis()
    else:
        raise ValueError(f"unknown space {space!r}")
    return Snapshot(space, state.time, grid, (ax,) * model.dim)
