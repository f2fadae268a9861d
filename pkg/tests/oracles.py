"""Reference computations written without the package, used as test oracles."""

from __future__ import annotations

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def kitaev_bands(t, delta, mu, L):
    k = 2 * np.pi * np.arange(L) / L
    E = np.sqrt((2 * t * np.cos(k) + mu) ** 2 + (2 * delta * np.sin(k)) ** 2)
    return np.sort(np.r_[E, -E])


def kitaev_parity(t, mu):
    """Sign of the Majorana number of a clean chain: -1 inside |mu| < 2|t|."""
    return int(np.sign(mu * mu - 4 * t * t))


def ssh_winding_oracle(v, w, n=4096):
    """Phase accumulated by v + w e^{ik} over one turn, in units of 2π."""
    k = 2 * np.pi * np.arange(n + 1) / n
    z = v + w * np.exp(1j * k)
    return float(np.sum(np.diff(np.unwrap(np.angle(z)))) / (2 * np.pi))


def qwz_h(u, kx, ky):
    return np.sin(kx) * SX + np.sin(ky) * SY + (u + np.cos(kx) + np.cos(ky)) * SZ


def chern_oracle(hfun, n=96):
    """Fukui-Hatsugai-Suzuki sum for the lower band of a 2x2 Bloch Hamiltonian."""
    ks = 2 * np.pi * np.arange(n) / n
    vec = np.empty((n, n, 2), dtype=complex)
    for i, kx in enumerate(ks):
        for j, ky in enumerate(ks):
            _, v = np.linalg.eigh(hfun(kx, ky))
            vec[i, j] = v[:, 0]
    tot = 0.0
    for i in range(n):
        for j in range(n):
            a, b = vec[i, j], vec[(i + 1) % n, j]
            c, d = vec[(i + 1) % n, (j + 1) % n], vec[i, (j + 1) % n]
            loop = np.vdot(a, b) * np.vdot(b, c) * np.vdot(c, d) * np.vdot(d, a)
            tot += np.angle(loop)
    return tot / (2 * np.pi)


def pfaffian_recursive(A):
    """Expansion along the first row; exponential cost, fine for n ≤ 8."""
    n = A.shape[0]
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    total = 0.0
    for j in range(1, n):
        keep = [i for i in range(n) if i not in (0, j)]
        total += (-1) ** (j + 1) * A[0, j] * pfaffian_recursive(A[np.ix_(keep, keep)])
    return total


def random_skew(rng, n, complex_=False):
    A = rng.normal(size=(n, n))
    if complex_:
        A = A + 1j * rng.normal(size=(n, n))
    return A - A.T


def random_hermitian(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (A + A.conj().T) / 2


# Matrix sizes of the graded standard representations, frozen as regression
# values.  Each is checked below to be a power of two no smaller than the
# minimal graded module size 2^ceil((r+s)/2).
GRADED_DIMS_NEG = [1, 2, 2, 4, 4, 16, 8, 16, 16]
GRADED_DIMS_POS = [1, 2, 2, 8, 4, 8, 8, 32, 16]

# KO groups of the point, period 8.
KO_POINT = ["Z", "Z2", "Z2", "0", "Z", "0", "0", "0"]
