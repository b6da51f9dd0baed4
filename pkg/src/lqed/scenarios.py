"""Emitter configurations, initial states and named parameter sets.

Positions are integer offsets from the lattice centre. Presets choose the
lattice size from the rule ``N > 4 J t_max`` plus the emitter spread, so
that emission does not wrap around the periodic lattice before ``t_max``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .bath import BathModel
from .evolve import EvolveConfig, SingleExcitationState
from .resolvent import c4_infinity, gamma_bar_e, r_sb_1d

__all__ = [
    "EmitterConfig",
    "InitialStateSpec",
    "STATE_TAGS",
    "build_initial_state",
    "initial_amplitudes",
    "four_qe_square",
    "diagonal_chain",
    "mode_normalization",
    "mode_functions",
    "auto_lattice_size",
    "PresetRun",
    "PRESETS",
    "preset",
    "preset_variants",
    "preset_runs",
]

STATE_TAGS = ("SingleExcited", "PlusPair", "MinusPair", "FourB", "SymmetricN")


@dataclass(frozen=True)
class EmitterConfig:
    """Identical emitters at distinct lattice sites.

    Parameters
    ----------
    g : float
        Emitter-bath coupling.
    delta : float
        Detuning from the band centre.
    positions : sequence of int tuples
        Offsets from the lattice centre, one tuple per emitter.
    """

    g: float
    delta: float
    positions: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        pos = tuple(tuple(int(c) for c in np.atleast_1d(p)) for p in self.positions)
        object.__setattr__(self, "positions", pos)
        if len(pos) < 1:
            raise ValueError("at least one emitter is required")
        if len({len(p) for p in pos}) != 1 or len(pos[0]) not in (1, 2):
            raise ValueError("positions must all have 1 or 2 components")
        if len(set(pos)) != len(pos):
            raise ValueError("emitter positions must be distinct")
        if not self.g >= 0:
            raise ValueError("g must be non-negative")

    @property
    def count(self) -> int:
        return len(self.positions)

    @property
    def dim(self) -> int:
        return len(self.positions[0])

    def spread(self) -> int:
        return int(np.max(np.abs(np.asarray(self.positions)))) if self.positions else 0


@dataclass(frozen=True)
class InitialStateSpec:
    """Tag of a single-excitation emitter state."""

    tag: str = "SingleExcited"

    def __post_init__(self):
        if self.tag not in STATE_TAGS:
            raise ValueError(f"unknown state tag {self.tag!r}; expected one of {STATE_TAGS}")

    def validate(self, config: EmitterConfig) -> None:
        n = config.count
        if self.tag == "SingleExcited" and n < 1:
            raise ValueError("SingleExcited needs an emitter")
        if self.tag in ("PlusPair", "MinusPair") and n != 2:
            raise ValueError(f"{self.tag} needs exactly two emitters, got {n}")
        if self.tag == "FourB":
            if n != 4 or config.dim != 2:
                raise ValueError("FourB needs four emitters on the square lattice")
            if _square_index(config.positions) is None:
                raise ValueError("FourB needs the square placement of four_qe_square")
        if self.tag == "SymmetricN":
            if config.dim != 2 or not _is_diagonal_chain(config.positions):
                raise ValueError("SymmetricN needs positions (2j, 2j) up to a common shift")


def _square_index(positions):
    p = np.asarray(positions)
    n2 = p[0, 0] - p[1, 0]
    if n2 <= 0 or n2 % 2:
        return None
    n = n2 // 2
    shift = p[0] - np.array([2 * n, 0])
    ref = np.asarray(four_qe_square(n)) + shift
    return n if np.array_equal(ref, p) else None


def _is_diagonal_chain(positions):
    p = np.asarray(positions)
    ref = np.asarray(diagonal_chain(len(p))) + (p[0] - np.asarray(diagonal_chain(len(p))[0]))
    return np.array_equal(ref, p)


def initial_amplitudes(config: EmitterConfig, spec: InitialStateSpec) -> np.ndarray:
    """Normalised emitter amplitudes of the tagged state."""
    spec.validate(config)
    n = config.count
    if spec.tag == "SingleExcited":
        amps = np.zeros(n, dtype=complex)
        amps[0] = 1.0
    elif spec.tag == "PlusPair":
        amps = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    elif spec.tag == "MinusPair":
        amps = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)
    elif spec.tag == "FourB":
        amps = np.array([1.0, -1.0, 1.0, -1.0], dtype=complex) / 2.0
    else:
        amps = np.full(n, 1.0 / math.sqrt(n), dtype=complex)
    return amps


def build_initial_state(config: EmitterConfig, spec: InitialStateSpec, model: BathModel = None) -> SingleExcitationState:
    """Tagged emitter state with the bath in its vacuum.

    `model` defaults to the smallest power-of-two lattice holding the
    emitters.
    """
    amps = initial_amplitudes(config, spec)
    if model is None:
        model = BathModel(config.dim, _pow2(2 * config.spread() + 2))
    return SingleExcitationState.vacuum_bath(amps, model)


def four_qe_square(n: int) -> List[Tuple[int, int]]:
    """Positions ``(2n,0), (0,2n), (2n,4n), (4n,2n)`` of the four-emitter square."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    return [(2 * n, 0), (0, 2 * n), (2 * n, 4 * n), (4 * n, 2 * n)]


def diagonal_chain(count: int) -> List[Tuple[int, int]]:
    """Positions ``(2j, 2j)`` for ``j = 0..count-1``."""
    return [(2 * j, 2 * j) for j in range(int(count))]


def mode_normalization(q, n: int):
    """Norms ``N_a, N_b`` of the bath modes coupling to the a and b states.

    ``N_{a,b} = 2 sqrt(1 + c_x c_y +/- c_x +/- c_y)`` with ``c_i = cos(4 q_i n)``.
    """
    q = np.asarray(q, dtype=float)
    cx = np.cos(4.0 * q[..., 0] * n)
    cy = np.cos(4.0 * q[..., 1] * n)
    # factorised forms avoid cancellation near zero
    na = 2.0 * np.sqrt(np.maximum((1.0 + cx) * (1.0 + cy), 0.0))
    nb = 2.0 * np.sqrt(np.maximum((1.0 - cx) * (1.0 - cy), 0.0))
    return na, nb


_FOUR_MODES = np.array(
    [
        [0.5, 0.5, 0.5, 0.5],
        [0.5, -0.5, 0.5, -0.5],
        [1 / math.sqrt(2), 0.0, -1 / math.sqrt(2), 0.0],
        [0.0, 1 / math.sqrt(2), 0.0, -1 / math.sqrt(2)],
    ]
)


def mode_functions(k, n: int) -> np.ndarray:
    """Mode functions ``f_alpha(k) = sum_j U_{alpha j} exp(i k.n_j)``, alpha = a, b, c, d.

    The rows of ``U`` are the orthonormal emitter combinations
    ``(1,1,1,1)/2``, ``(1,-1,1,-1)/2``, ``(1,0,-1,0)/sqrt 2`` and
    ``(0,1,0,-1)/sqrt 2`` for the square placement of :func:`four_qe_square`.
    Returns an array with a leading axis of length 4.
    """
    k = np.asarray(k, dtype=float)
    pos = np.asarray(four_qe_square(n), dtype=float)
    phases = np.exp(1j * np.tensordot(k, pos.T, axes=([-1], [0])))
    return np.moveaxis(phases @ _FOUR_MODES.T, -1, 0)


def _pow2(n):
    return 1 << max(1, int(math.ceil(math.log2(max(n, 2)))))


def auto_lattice_size(t_max: float, spread: int, J: float = 1.0, margin: int = 20) -> int:
    """Smallest power of two with ``N > 4 J t_max + 2 spread + 2 margin``."""
    return _pow2(4.0 * J * t_max + 2 * spread + 2 * margin + 1)


# ----------------------------------------------------------------------------
# Presets
# ----------------------------------------------------------------------------


@dataclass
class PresetRun:
    """One parameter set of a preset and the values it is expected to give."""

    name: str
    label: str
    config: EvolveConfig
    emitters: EmitterConfig
    state: InitialStateSpec
    expected: Dict[str, float] = field(default_factory=dict)


def _run(name, label, dim, g, delta, positions, tag, t_max, dt=0.05, J=1.0, expected=None, **kw):
    em = EmitterConfig(g, delta, tuple(positions))
    spec = InitialStateSpec(tag)
    N = auto_lattice_size(t_max, em.spread(), J)
    cfg = EvolveConfig(
        bath=BathModel(dim, N, J),
        emitters=em,
        initial=initial_amplitudes(em, spec),
        dt=dt,
        t_max=t_max,
        **kw,
    )
    return PresetRun(name, label, cfg, em, spec, dict(expected or {}))


def _centred(positions):
    p = np.asarray(positions)
    c = (p.max(axis=0) + p.min(axis=0)) // 2
    return [tuple(int(v) for v in row) for row in p - c]


def _fig1d1():
    return [
        _run("fig1d1", f"delta={d:g}", 1, 0.4, d, [(0,)], "SingleExcited", 200.0, expected={"gamma_markov_delta0": 0.16})
        for d in (-3.0, -2.0, -1.0, 0.0)
    ]


def _fig1d4():
    runs = []
    for n12 in (10, 20, 42):
        pos = _centred([(0,), (n12,)])
        # Gamma_+/- = Gamma_e (1 +/- cos(k n12)) with k = pi/2 at Delta = 0
        tag = "PlusPair" if math.cos(0.5 * math.pi * n12) < 0 else "MinusPair"
        r = r_sb_1d(0.1, 0.0, n12)
        runs.append(_run("fig1d4", f"n12={n12}", 1, 0.1, 0.0, pos, tag, 400.0, expected={"R_sb_squared": r * r}))
    return runs


def _fig2():
    return [
        _run("fig2", f"delta={d:g}", 2, 0.1, float(d), [(0, 0)], "SingleExcited", 100.0, snapshot_times=(100.0,))
        for d in np.linspace(-5.0, 0.0, 11)
    ]


def _fig5():
    return [
        _run("fig5", f"g={g:g}", 2, g, 0.0, [(0, 0)], "SingleExcited", 400.0, expected={"gamma_bar_e": gamma_bar_e(g)})
        for g in (0.1, 0.2, 0.3)
    ]


def _fig7():
    runs = []
    for n in (2, 4, 6, 8, 10):
        pos = _centred([(0, 0), (n, n)])
        for tag in ("PlusPair", "MinusPair"):
            runs.append(_run("fig7", f"n={n},{tag}", 2, 0.1, 0.0, pos, tag, 400.0))
    return runs


def _fig9():
    return [
        _run("fig9", f"n={n}", 2, 0.05, 0.0, _centred(four_qe_square(n)), "FourB", 1000.0, dt=0.1,
             expected={"C4_inf_squared": c4_infinity(0.05, n) ** 2}, sample_every=10)
        for n in range(1, 9)
    ]


def _fig10():
    runs = []
    for g in (0.05, 0.075, 0.1):
        for ne in range(1, 16):
            runs.append(_run("fig10", f"g={g:g},Ne={ne}", 2, g, 0.0, _centred(diagonal_chain(ne)), "SymmetricN", 200.0))
    return runs


def _fig11b():
    # the dressed dark state holds a photon weight 1 - C4(inf), which bath loss
    # removes at rate kappa to first order
    n = 1
    return [
        _run("fig11b", f"kappa={k:g}", 2, 0.1, 0.0, _centred(four_qe_square(n)), "FourB", 1000.0, dt=0.1, kappa=k,
             expected={"C4_inf_squared": c4_infinity(0.1, n) ** 2, "plateau_rate": (1.0 - c4_infinity(0.1, n)) * k},
             sample_every=10)
        for k in (0.0, 1e-3, 3e-3, 1e-2)
    ]


PRESETS = {
    "fig1d1": _fig1d1,
    "fig1d4": _fig1d4,
    "fig2": _fig2,
    "fig5": _fig5,
    "fig7": _fig7,
    "fig9": _fig9,
    "fig10": _fig10,
    "fig11b": _fig11b,
}


def preset_variants(name: str) -> List[str]:
    """Labels of the parameter sets of a preset."""
    return [r.label for r in _lookup(name)()]


def _lookup(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


def preset(name: str, variant=0) -> Tuple[EvolveConfig, Dict[str, float]]:
    """Configuration and expected values of one parameter set of a preset.

    Parameters
    ----------
    name : str
        One of :data:`PRESETS`.
    variant : int or str
        Index or label from :func:`preset_variants`.

    Raises
    ------
    KeyError
        Unknown preset or variant.
    """
    runs = _lookup(name)()
    if isinstance(variant, str):
        match = [r for r in runs if r.label == variant]
        if not match:
            raise KeyError(f"preset {name!r} has no variant {variant!r}")
        run = match[0]
    else:
        run = runs[int(variant)]
    return run.config, dict(run.expected, label=run.label, state=run.state.tag)


def preset_runs(name: str) -> List[PresetRun]:
    """All parameter sets of a preset."""
    return _lookup(name)()
