"""Independent reference computations shared by the tests."""
import numpy as np
from scipy import integrate


def lattice_sum(z, n12=0, dim=1, N=4096, g=1.0, J=1.0):
    """``g^2/N^dim sum_k e^{i k.n}/(z - omega_k)`` on a finite periodic lattice."""
    k = 2.0 * np.pi * np.arange(N) / N
    if dim == 1:
        w = -2.0 * J * np.cos(k)
        return g * g * np.mean(np.exp(1j * k * n12) / (z - w))
    nx, ny = n12 if n12 else (0, 0)
    total = 0.0j
    cy = -2.0 * J * np.cos(k)
    ey = np.exp(1j * k * ny)
    for chunk in np.array_split(np.arange(N), 16):
        kx = k[chunk][:, None]
        w = -2.0 * J * np.cos(kx) + cy[None, :]
        total += np.sum(np.exp(1j * kx * nx) * ey[None, :] / (z - w))
    return g * g * total / N**2


def four_lattice_sum(z, n, N=2048, g=1.0, J=1.0):
    """Square-of-four self-energy ``Sigma_b`` from the lattice sum with mode function f_b."""
    k = 2.0 * np.pi * np.arange(N) / N
    kx, ky = np.meshgrid(k, k, indexing="ij")
    w = -2.0 * J * (np.cos(kx) + np.cos(ky))
    # sites (2n,0),(0,2n),(2n,4n),(4n,2n) centred on (2n,2n) with pattern (1,-1,1,-1)/2
    pos = [(0, -2 * n), (-2 * n, 0), (0, 2 * n), (2 * n, 0)]
    amp = np.array([1, -1, 1, -1]) / 2.0
    f = sum(a * np.exp(1j * (kx * p[0] + ky * p[1])) for a, p in zip(amp, pos))
    return g * g * np.mean(np.abs(f) ** 2 / (z - w))


def ellip_k_quad(m):
    f = lambda t: 1.0 / np.sqrt(1.0 - m * np.sin(t) ** 2)
    return integrate.quad(f, 0.0, np.pi / 2, epsabs=1e-14, epsrel=1e-14)[0]


def agm_k(m):
    a, b = 1.0, np.sqrt(1.0 - m)
    for _ in range(60):
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return np.pi / (2.0 * a)
