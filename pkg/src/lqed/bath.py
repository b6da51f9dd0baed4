"""Nearest-neighbour tight-binding reservoirs on a line and a square lattice.

Energies are measured in units of the hopping rate ``J`` and the emitter
frequency is removed by the rotating frame, so the band is centred at zero:
``[-2J, 2J]`` for the chain and ``[-4J, 4J]`` for the square lattice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .specfun import ellip_k

__all__ = ["BathModel", "dispersion", "group_velocity", "dos", "momentum_grid"]


@dataclass(frozen=True)
class BathModel:
    """Tight-binding bath.

    Parameters
    ----------
    dim : int
        Lattice dimension, 1 or 2.
    N : int
        Sites per dimension (periodic boundary conditions).
    J : float
        Hopping rate, the energy unit.
    """

    dim: int = 2
    N: int = 64
    J: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if not self.J > 0:
            raise ValueError(f"J must be positive, got {self.J}")

    @property
    def band_edge(self) -> float:
        """Upper band edge ``2 J dim``."""
        return 2.0 * self.J * self.dim

    @property
    def n_modes(self) -> int:
        return self.N**self.dim

    def k_axis(self) -> np.ndarray:
        """Momenta along one axis, ``2 pi/N * {-N/2, ..., N/2-1}``."""
        return 2.0 * np.pi / self.N * (np.arange(self.N) - self.N // 2)


def _components(model: BathModel, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if model.dim == 1:
        if k.ndim >= 1 and k.shape[-1] == 1:
            k = k[..., 0]
        return k[..., None]
    if k.ndim == 0 or k.shape[-1] != 2:
        raise ValueError("2D momenta need two components in the last axis")
    return k


def dispersion(model: BathModel, k) -> np.ndarray:
    """Band energy ``-2J sum_i cos(k_i)``.

    `k` is a scalar (1D) or an array whose last axis holds the components.
    """
    kc = _components(model, k)
    out = -2.0 * model.J * np.cos(kc).sum(axis=-1)
    return out[()] if out.ndim == 0 else out


def group_velocity(model: BathModel, k) -> np.ndarray:
    """Gradient ``2J sin(k_i)`` of the dispersion."""
    kc = _components(model, k)
    v = 2.0 * model.J * np.sin(kc)
    if model.dim == 1:
        v = v[..., 0]
    return v[()] if np.ndim(v) == 0 else v


def dos(model: BathModel, E) -> np.ndarray:
    """Density of states per site, normalised to unit weight over the band.

    Chain: ``1/(pi sqrt(4J^2 - E^2))``. Square lattice:
    ``K(1 - (E/4J)^2) / (2 pi^2 J)`` with ``+inf`` exactly at the van Hove
    point ``E = 0``. Band edges return the limit from inside the band.
    """
    E = np.asarray(E, dtype=float)
    J = model.J
    out = np.zeros_like(E)
    if model.dim == 1:
        inside = np.abs(E) < 2.0 * J
        out[inside] = 1.0 / (np.pi * np.sqrt(4.0 * J * J - E[inside] ** 2))
        out[np.abs(E) == 2.0 * J] = np.inf
    else:
        # pass the complement so that K stays accurate near E = 0
        mc = (E / (4.0 * J)) ** 2
        inside = (np.abs(E) <= 4.0 * J) & (mc > 0.0)
        out[inside] = np.real(ellip_k(1.0 - mc[inside], mc[inside])) / (2.0 * np.pi**2 * J)
        out[(np.abs(E) <= 4.0 * J) & (mc == 0.0)] = np.inf
    return out[()] if out.ndim == 0 else out


def momentum_grid(model: BathModel) -> np.ndarray:
    """All ``N**dim`` grid momenta in row-major order.

    Returns an array of shape ``(N,)`` in 1D and ``(N*N, 2)`` in 2D.
    """
    ax = model.k_axis()
    if model.dim == 1:
        return ax
    kx, ky = np.meshgrid(ax, ax, indexing="ij")
    return np.stack([kx.ravel(), ky.ravel()], axis=-1)
