"""Finite tight-binding Nambu Hamiltonians on Z^d truncations, with on-site disorder.

Ordering is site-major: index = site · dim W + internal.  Sites are raveled
in C order over the coordinate grid.  A hopping block ``t_x`` moves a particle
from site ``j`` to ``j + x``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    DEFAULT_TOL,
    NambuContext,
    RealStructure,
    StructuredMatrix,
    hamiltonian_residuals,
    iqpv_residuals,
    operator_sign,
    s0,
    sx,
    sy,
    sz,
)


# ------------------------------------------------------------------ geometry


@dataclass(frozen=True)
class BoundaryCondition:
    """``periodic`` torus, or ``slab`` open along ``direction`` (0-based) and periodic elsewhere."""

    kind: str = "periodic"
    direction: int = 0

    def __post_init__(self):
        if self.kind not in ("periodic", "slab"):
            raise ValueError(f"unknown boundary condition {self.kind!r}")

    @staticmethod
    def parse(text: str) -> "BoundaryCondition":
        text = text.strip()
        if text in ("periodic", "torus", "periodic_torus"):
            return BoundaryCondition("periodic")
        if text.startswith("slab"):
            rest = text[4:].strip(":() ")
            return BoundaryCondition("slab", int(rest) - 1 if rest else 0)
        raise ValueError(f"cannot parse boundary condition {text!r}")

    def periodic_in(self, axis: int) -> bool:
        return self.kind == "periodic" or axis != self.direction


PERIODIC = BoundaryCondition("periodic")


def slab(direction: int = 0) -> BoundaryCondition:
    return BoundaryCondition("slab", direction)


def coords(d: int, L: int) -> np.ndarray:
    """All site coordinates, shape (L^d, d), C order."""
    return np.array(list(itertools.product(range(L), repeat=d)), dtype=int).reshape(-1, d)


def site_index(c: np.ndarray, L: int) -> np.ndarray:
    return np.ravel_multi_index(tuple(np.asarray(c).T), (L,) * np.asarray(c).shape[-1])


def distance(d: int, L: int, bc: BoundaryCondition) -> np.ndarray:
    """∞-norm distance between all pairs of sites, with wrap on periodic axes."""
    c = coords(d, L)
    diff = np.abs(c[:, None, :] - c[None, :, :])
    for ax in range(d):
        if bc.periodic_in(ax):
            diff[..., ax] = np.minimum(diff[..., ax], L - diff[..., ax])
    return diff.max(axis=-1)


# ------------------------------------------------------------------ model data


def nambu_block(h: np.ndarray, delta: np.ndarray | None = None) -> np.ndarray:
    """``[[h, Δ], [-conj Δ, -conj h]]``."""
    h = np.asarray(h, dtype=complex)
    delta = np.zeros_like(h) if delta is None else np.asarray(delta, dtype=complex)
    return np.block([[h, delta], [-delta.conj(), -h.conj()]])


@dataclass(frozen=True, eq=False)
class LatticeModel:
    """Translation-invariant hoppings plus a linear on-site disorder term.

    ``hoppings`` maps offsets with non-negative lexicographic sign to Nambu
    blocks; the opposite offsets are filled in by Hermiticity.  The disorder at
    a site is ``strength · Σ_i ω_i · disorder_basis[i]``.
    """

    name: str
    d: int
    L: int
    internal: NambuContext
    hoppings: dict
    disorder_basis: tuple = ()
    cls: str = "D"
    params: dict = field(default_factory=dict)

    @property
    def nW(self) -> int:
        return self.internal.dim

    @property
    def n_sites(self) -> int:
        return self.L ** self.d

    @property
    def range(self) -> int:
        return max((max(abs(c) for c in x) for x in self.hoppings), default=0)

    @property
    def k(self) -> int:
        return len(self.disorder_basis)

    def with_size(self, L: int) -> "LatticeModel":
        return replace(self, L=int(L))

    def full_hoppings(self) -> dict:
        """Offsets in both directions; the zero offset is Hermitian-symmetrized."""
        out = {}
        for x, t in self.hoppings.items():
            x = tuple(int(c) for c in x)
            t = np.asarray(t, dtype=complex)
            if all(c == 0 for c in x):
                out[x] = out.get(x, 0) + (t + t.conj().T) / 2
                continue
            mx = tuple(-c for c in x)
            out[x] = out.get(x, 0) + t
            out[mx] = out.get(mx, 0) + t.conj().T
        return out

    def bloch(self, k) -> np.ndarray:
        """``Σ_x t_x e^{i k·x}`` on W."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        out = np.zeros((self.nW, self.nW), dtype=complex)
        for x, t in self.full_hoppings().items():
            out += t * np.exp(1j * float(np.dot(k, x)))
        return out


@dataclass(frozen=True, eq=False)
class DisorderConfig:
    omega: np.ndarray  # shape (L,)*d + (k,)
    strength: float
    seed: int | None = None

    def site_values(self) -> np.ndarray:
        return self.omega.reshape(-1, self.omega.shape[-1])


def disorder(model: LatticeModel, seed: int, strength: float) -> DisorderConfig:
    """Uniform i.i.d. draw from Ω₀ = [-1,1]^k, via a counter-based generator."""
    rng = np.random.Generator(np.random.Philox(int(seed) & (2 ** 64 - 1)))
    omega = rng.uniform(-1.0, 1.0, size=(model.L,) * model.d + (max(model.k, 1),))
    return DisorderConfig(omega[..., : model.k], float(strength), int(seed))


def clean(model: LatticeModel) -> DisorderConfig:
    return DisorderConfig(np.zeros((model.L,) * model.d + (model.k,)), 0.0, None)


def translate_config(dis: DisorderConfig, x) -> DisorderConfig:
    """``(ω·x)_y = ω_{y+x}`` with wrap-around."""
    x = tuple(int(c) for c in np.atleast_1d(x))
    axes = tuple(range(len(x)))
    omega = np.roll(dis.omega, shift=tuple(-c for c in x), axis=axes)
    return DisorderConfig(omega, dis.strength, dis.seed)


def translation(d: int, L: int, x, nW: int) -> np.ndarray:
    """Permutation matrix ``u_x |y⟩ = |y + x⟩`` on ℓ²(torus) ⊗ W."""
    c = coords(d, L)
    tgt = site_index((c + np.asarray(x, dtype=int)) % L, L)
    N = L ** d
    P = np.zeros((N, N))
    P[tgt, np.arange(N)] = 1.0
    return np.kron(P, np.eye(nW))


def translation_perm(d: int, L: int, x, nW: int) -> np.ndarray:
    """Index map p with ``(u_x* M u_x)[a, b] = M[p[a], p[b]]``."""
    c = coords(d, L)
    tgt = site_index((c + np.asarray(x, dtype=int)) % L, L)
    return (tgt[:, None] * nW + np.arange(nW)[None, :]).ravel()


def translate_operator(M: np.ndarray, d: int, L: int, x, nW: int) -> np.ndarray:
    """``u_x* M u_x`` by pure re-indexing, so no floating-point arithmetic is involved."""
    p = translation_perm(d, L, x, nW)
    return M[np.ix_(p, p)]


def lattice_context(model: LatticeModel) -> RealStructure:
    return model.internal.gamma.tiled(model.n_sites)


def _twist_ok(model: LatticeModel, twist) -> None:
    n = model.internal.n_V
    paired = any(np.any(t[:n, n:]) for t in model.full_hoppings().values())
    for th in twist:
        if paired and not np.isclose(np.cos(th) ** 2, 1.0):
            raise ValueError("twists other than 0, π need a charge-conserving model")


def assemble(model: LatticeModel, dis: DisorderConfig | None = None,
             bc: BoundaryCondition = PERIODIC, twist=None) -> StructuredMatrix:
    """Nambu Hamiltonian on the truncated lattice.

    ``twist`` (one angle per axis) multiplies hops that wrap forward across a
    periodic boundary by ``diag(e^{iθ}, e^{-iθ})`` on V ⊕ V*; backward wraps get
    the inverse phase.
    """
    d, L, nW = model.d, model.L, model.nW
    N = model.n_sites
    c = coords(d, L)
    src = np.arange(N)
    H = np.zeros((N, nW, N, nW), dtype=complex)
    if twist is not None:
        twist = tuple(float(a) for a in np.atleast_1d(twist))
        _twist_ok(model, twist)
    n = model.internal.n_V
    for x, t in sorted(model.full_hoppings().items()):
        tc = c + np.asarray(x, dtype=int)
        keep = np.ones(N, dtype=bool)
        for ax in range(d):
            if not bc.periodic_in(ax):
                keep &= (tc[:, ax] >= 0) & (tc[:, ax] < L)
        tgt = site_index(tc[keep] % L, L)
        if twist is None or not any(twist):
            H[tgt, :, src[keep], :] += t
            continue
        wraps = np.zeros(int(keep.sum()))
        for ax, th in enumerate(twist):
            wraps += th * np.floor_divide(tc[keep][:, ax], L)
        ph = np.exp(1j * wraps)
        blocks = np.empty((len(ph), nW, nW), dtype=complex)
        blocks[:, :n, :] = ph[:, None, None] * t[None, :n, :]
        blocks[:, n:, :] = ph.conj()[:, None, None] * t[None, n:, :]
        H[tgt, :, src[keep], :] += blocks
    if dis is not None and dis.strength != 0.0 and model.k:
        w = dis.site_values()
        for i, D in enumerate(model.disorder_basis):
            H[src, :, src, :] += (dis.strength * w[:, i])[:, None, None] * np.asarray(D, dtype=complex)
    return StructuredMatrix(H.reshape(N * nW, N * nW), lattice_context(model))


def assembled_residuals(H: StructuredMatrix) -> dict:
    return hamiltonian_residuals(H)


def gap(H) -> float:
    M = getattr(H, "M", H)
    return float(np.min(np.abs(np.linalg.eigvalsh(M))))


def flatten(H: StructuredMatrix, gap_tol: float = 1e-8) -> StructuredMatrix:
    """``J = -i sign(H)``."""
    return operator_sign(H, gap_tol).scale(-1j)


def flatten_residuals(J: StructuredMatrix) -> dict:
    return iqpv_residuals(J)


def kernel_blocks(M: np.ndarray, n_sites: int) -> np.ndarray:
    nW = M.shape[0] // n_sites
    return M.reshape(n_sites, nW, n_sites, nW)


def block_norms(M: np.ndarray, n_sites: int) -> np.ndarray:
    """Operator norm of each site block ``M(x, y)``."""
    B = kernel_blocks(M, n_sites).transpose(0, 2, 1, 3)
    return np.linalg.norm(B, ord=2, axis=(2, 3))


def controlled_check(H, R: int, d: int, L: int, bc: BoundaryCondition = PERIODIC) -> bool:
    """True iff every kernel block beyond distance R vanishes exactly."""
    M = getattr(H, "M", H)
    B = kernel_blocks(M, L ** d)
    far = distance(d, L, bc) > R
    return not np.any(B.transpose(0, 2, 1, 3)[far])


@dataclass(frozen=True)
class DecayFit:
    xi: float
    r2: float
    prefactor: float
    distances: tuple
    norms: tuple

    @property
    def ok(self) -> bool:
        return np.isfinite(self.xi) and self.xi > 0


def fit_decay(r: np.ndarray, y: np.ndarray, floor: float = 1e-12) -> DecayFit:
    """Least squares of log y against r; ``y ≈ C e^{-r/ξ}``."""
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    m = y > floor
    r, y = r[m], y[m]
    if len(r) < 3:
        return DecayFit(float("nan"), float("nan"), float("nan"), tuple(r), tuple(y))
    A = np.vstack([np.ones_like(r), r]).T
    coef, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    pred = A @ coef
    ly = np.log(y)
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    slope = coef[1]
    xi = -1.0 / slope if slope < 0 else float("inf")
    return DecayFit(xi, r2, float(np.exp(coef[0])), tuple(r), tuple(y))


def kernel_decay(J, d: int, L: int, bc: BoundaryCondition = PERIODIC, r_min: int = 2) -> DecayFit:
    """Fit ``max_{|x-y|=r} ‖J(x,y)‖`` over 2 ≤ r ≤ L/2."""
    M = getattr(J, "M", J)
    norms = block_norms(M, L ** d)
    dist = distance(d, L, bc)
    rs = np.arange(r_min, L // 2 + 1)
    ys = np.array([norms[dist == r].max() if np.any(dist == r) else 0.0 for r in rs])
    return fit_decay(rs, ys)


# ---------------------------------------------------------------------- zoo


def _hop(d: int, axis: int, step: int = 1) -> tuple:
    x = [0] * d
    x[axis] = step
    return tuple(x)


def kitaev_chain(t: float = 1.0, delta: float = 1.0, mu: float = 0.5, L: int = 40) -> LatticeModel:
    """Spinless p-wave chain, class D. Disorder: random chemical potential."""
    one = np.eye(1)
    hop = {
        (0,): nambu_block(-mu * one),
        (1,): nambu_block(-t * one, delta * one),
    }
    return LatticeModel("kitaev", 1, L, NambuContext(1), hop,
                        (nambu_block(-one),), "D", {"t": t, "delta": delta, "mu": mu})


def kitaev_dispersion(t: float, delta: float, mu: float, k: np.ndarray) -> np.ndarray:
    return np.sqrt((2 * t * np.cos(k) + mu) ** 2 + 4 * delta ** 2 * np.sin(k) ** 2)


def ssh(v: float = 0.5, w: float = 1.0, L: int = 40, spinful: bool = False) -> LatticeModel:
    """Two-sublattice chain: intracell v (A↔B), intercell w from A_j to B_{j+1}.

    Class AIII; with a trivial spin factor the real hopping makes it class BDI.
    Disorder perturbs the intracell hopping, which keeps the chiral symmetry.
    """
    AB = np.array([[0, 0], [1, 0]], dtype=complex)  # |B⟩⟨A|
    h0 = v * sx
    h1 = w * AB
    spin = s0 if spinful else np.eye(1)
    nV = 2 * spin.shape[0]
    hop = {
        (0,): nambu_block(np.kron(spin, h0)),
        (1,): nambu_block(np.kron(spin, h1)),
    }
    dis = (nambu_block(np.kron(spin, sx)),)
    cls = "BDI" if spinful else "AIII"
    return LatticeModel("ssh", 1, L, NambuContext(nV), hop, dis, cls,
                        {"v": v, "w": w, "spinful": spinful})


def ssh_offdiag(v: float, w: float, k: np.ndarray) -> np.ndarray:
    """⟨B|h(k)|A⟩ under the e^{+ikx} Bloch convention."""
    return v + w * np.exp(1j * k)


def qwz(u_mass: float = 1.0, L: int = 12) -> LatticeModel:
    """Two-band Chern insulator, class A. Disorder: random on-site potential."""
    hop = {
        (0, 0): nambu_block(u_mass * sz),
        (1, 0): nambu_block((sz + 1j * sx) / 2),
        (0, 1): nambu_block((sz + 1j * sy) / 2),
    }
    return LatticeModel("qwz", 2, L, NambuContext(2), hop,
                        (nambu_block(s0),), "A", {"u_mass": u_mass})


def qwz_dvector(u: float, kx, ky):
    """d(k) with h(k) = d·σ under the e^{+ikx} convention."""
    return np.stack([-np.sin(kx), -np.sin(ky), u + np.cos(kx) + np.cos(ky)])


def p_ip(t: float = 1.0, delta: float = 1.0, mu: float = 2.0, L: int = 12) -> LatticeModel:
    """Spinless chiral p-wave superconductor, class D. Disorder: random chemical potential."""
    one = np.eye(1)
    hop = {
        (0, 0): nambu_block(-mu * one),
        (1, 0): nambu_block(-t * one, 0.5j * delta * one),
        (0, 1): nambu_block(-t * one, 0.5 * delta * one),
    }
    return LatticeModel("p_ip", 2, L, NambuContext(1), hop,
                        (nambu_block(-one),), "D", {"t": t, "delta": delta, "mu": mu})


ZOO = {"kitaev": kitaev_chain, "ssh": ssh, "qwz": qwz, "p_ip": p_ip}


def make_model(name: str, **params) -> LatticeModel:
    try:
        ctor = ZOO[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(ZOO)}") from None
    return ctor(**params)


def bloch_gap(model: LatticeModel, n_k: int = 64) -> float:
    """Minimum |E| of the clean Bloch Hamiltonian on an n_k^d grid."""
    ks = 2 * np.pi * np.arange(n_k) / n_k
    best = np.inf
    for k in itertools.product(ks, repeat=model.d):
        best = min(best, np.min(np.abs(np.linalg.eigvalsh(model.bloch(k)))))
    return float(best)


__all__ = [
    "BoundaryCondition", "PERIODIC", "slab", "LatticeModel", "DisorderConfig", "DecayFit",
    "coords", "site_index", "distance", "nambu_block", "disorder", "clean", "translate_config",
    "translation", "translation_perm", "translate_operator", "assemble", "assembled_residuals", "gap", "flatten", "flatten_residuals",
    "block_norms", "controlled_check", "fit_decay", "kernel_decay", "kitaev_chain",
    "kitaev_dispersion", "ssh", "ssh_offdiag", "qwz", "qwz_dvector", "p_ip", "ZOO", "make_model",
    "bloch_gap", "lattice_context", "kernel_blocks", "DEFAULT_TOL",
]
