"""Tenfold-way classes: physical symmetries on Nambu space and their pseudo-symmetries.

Internal layout of V is spin ⊗ sublattice ⊗ orbital; a factor is present only
when the class needs it.  Anti-linear operators are stored as ``U`` with the
understanding that they act as ``U ∘ conj``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import block_diag

from .core import (
    DEFAULT_TOL,
    GapClosed,
    NambuContext,
    RealStructure,
    StructuredMatrix,
    TenfoldError,
    kron,
    operator_sign,
    opnorm,
    s0,
    sx,
    sy,
    sz,
)


class DimensionNotDivisible(TenfoldError):
    pass


class InvalidClass(TenfoldError):
    pass


class InconsistentSquares(TenfoldError):
    pass


class NotAntiCommuting(TenfoldError):
    pass


REAL_CLASSES = ("D", "DIII", "AII", "CII", "C", "CI", "AI", "BDI")
COMPLEX_CLASSES = ("A", "AIII")
ALL_CLASSES = REAL_CLASSES + COMPLEX_CLASSES

_GENERATORS = {
    "D": (), "DIII": ("T",), "AII": ("T", "iQ"), "CII": ("T", "iQ", "C"),
    "C": ("j",), "CI": ("j", "T"), "AI": ("j", "T", "iQ"), "BDI": ("j", "T", "iQ", "C"),
    "A": ("iQ",), "AIII": ("iQ", "C"),
}

# (Θ², Ξ², Π²); 0 marks an absent operator
SRFL_TABLE = {
    "A": (0, 0, 0), "AIII": (0, 0, 1), "D": (0, 1, 0), "DIII": (-1, 1, 1),
    "AII": (-1, 0, 0), "CII": (-1, -1, 1), "C": (0, -1, 0), "CI": (1, -1, 1),
    "AI": (1, 0, 0), "BDI": (1, 1, 1),
}


@dataclass(frozen=True)
class SymmetryClass:
    label: str

    def __post_init__(self):
        if self.label not in ALL_CLASSES:
            raise InvalidClass(f"unknown class {self.label!r}")

    @property
    def complex(self) -> bool:
        return self.label in COMPLEX_CLASSES

    @property
    def s(self) -> int:
        """s for real classes; 0 (A) or 1 (AIII) for the complex ones."""
        if self.complex:
            return COMPLEX_CLASSES.index(self.label)
        return REAL_CLASSES.index(self.label)

    @property
    def generators(self) -> tuple:
        return _GENERATORS[self.label]

    @property
    def needs_spin(self) -> bool:
        return "T" in self.generators or "j" in self.generators

    @property
    def needs_sublattice(self) -> bool:
        return "C" in self.generators

    @staticmethod
    def real(s: int) -> "SymmetryClass":
        return SymmetryClass(REAL_CLASSES[s % 8])


def as_class(c) -> SymmetryClass:
    return c if isinstance(c, SymmetryClass) else SymmetryClass(str(c))


@dataclass(frozen=True, eq=False)
class PhysicalSymmetries:
    """Symmetry operators of one class on ``W = V ⊕ V*``, optionally tiled over sites.

    ``U_T``, ``j`` and ``S`` are single-site V-level matrices.  The ``*_W``
    properties return Nambu extensions acting on ``ℓ²(sites) ⊗ W``
    (``T_W`` anti-linear as ``T_W ∘ conj``).
    """

    cls: SymmetryClass
    nambu: NambuContext
    n_orb: int
    U_T: np.ndarray | None
    j: tuple
    S: np.ndarray | None
    sites: int = 1

    def _tile(self, X):
        if X is None:
            return None
        return X if self.sites == 1 else np.kron(np.eye(self.sites), X)

    def on_sites(self, n_sites: int) -> "PhysicalSymmetries":
        return replace(self, sites=int(n_sites))

    @property
    def n_V(self) -> int:
        """Dimension of V on one site."""
        return self.nambu.n_V

    @property
    def dim(self) -> int:
        return self.sites * self.nambu.dim

    @property
    def Q(self) -> np.ndarray:
        return self._tile(self.nambu.Q)

    @property
    def gamma(self) -> RealStructure:
        return RealStructure(self._tile(self.nambu.gamma.G), "real")

    @property
    def T_W(self) -> np.ndarray | None:
        return None if self.U_T is None else self._tile(extend_linear(self.U_T))

    @property
    def j_W(self) -> tuple:
        return tuple(self._tile(extend_linear(x)) for x in self.j)

    @property
    def S_W(self) -> np.ndarray | None:
        return None if self.S is None else self._tile(extend_linear(self.S))

    @property
    def C_W(self) -> np.ndarray | None:
        """Linear part of the anti-linear ``C = γS``."""
        return None if self.S is None else self.gamma.G @ self.S_W

    @property
    def v_mask(self) -> np.ndarray:
        """Boolean mask of the V coordinates (charge +1)."""
        return np.real(np.diag(self.Q)) > 0

    def wrap(self, M: np.ndarray) -> StructuredMatrix:
        return StructuredMatrix(M, self.gamma)


def extend_linear(X: np.ndarray) -> np.ndarray:
    return block_diag(X, X.conj())


def build_physical(n_V: int, cls, sites: int = 1) -> PhysicalSymmetries:
    cls = as_class(cls)
    block = (2 if cls.needs_spin else 1) * (2 if cls.needs_sublattice else 1)
    if n_V % block or n_V == 0:
        raise DimensionNotDivisible(f"n_V = {n_V} not divisible by {block} for class {cls.label}")
    n_orb = n_V // block
    spin = s0 if cls.needs_spin else np.eye(1)
    sub = s0 if cls.needs_sublattice else np.eye(1)
    orb = np.eye(n_orb)
    U_T = j = S = None
    if "T" in cls.generators:
        U_T = kron(1j * sy, sub, orb)
    if "j" in cls.generators:
        j = tuple(kron(1j * p, sub, orb) for p in (sx, sy, sz))
    if "C" in cls.generators:
        S = kron(spin, sz, orb)
    return PhysicalSymmetries(cls, NambuContext(n_V), n_orb, U_T, j or (), S, sites)


def physical_residuals(ph: PhysicalSymmetries) -> dict:
    """Residuals of the algebraic relations between the on-site symmetries."""
    ph = ph.on_sites(1)
    res = {}
    Q = ph.Q
    if ph.U_T is not None:
        U = ph.U_T
        res["T_square"] = opnorm(U @ U.conj() + np.eye(len(U)))
        T = ph.T_W
        # T anti-commutes with iQ: T (iQ) = -i T Q
        res["T_iQ"] = opnorm(T @ (1j * Q).conj() + 1j * Q @ T)
    if ph.j:
        n = len(ph.j[0])
        res["j_square"] = max(opnorm(x @ x + np.eye(n)) for x in ph.j)
        res["j1j2"] = opnorm(ph.j[0] @ ph.j[1] + ph.j[2])
        res["j_Q"] = max(opnorm(x @ Q - Q @ x) for x in ph.j_W)
        if ph.U_T is not None:
            res["j_T"] = max(opnorm(x @ ph.U_T - ph.U_T @ x.conj()) for x in ph.j)
    if ph.S is not None:
        S = ph.S
        res["S_square"] = opnorm(S @ S - np.eye(len(S)))
        if ph.U_T is not None:
            res["S_T"] = opnorm(S @ ph.U_T - ph.U_T @ S.conj())
        if ph.j:
            res["S_j"] = max(opnorm(S @ x - x @ S) for x in ph.j)
        res["S_Q"] = opnorm(ph.S_W @ Q - Q @ ph.S_W)
    return res


# ------------------------------------------------------------- pseudo-symmetries


def base_pseudo(ph: PhysicalSymmetries) -> dict:
    """``J_T = γT``, ``J_Q = iγQT``, ``J_C = iγQC`` as linear matrices on W."""
    G = ph.gamma.G
    Q = ph.Q
    out = {}
    if ph.T_W is not None:
        out["J_T"] = G @ ph.T_W.conj()
        out["J_Q"] = 1j * G @ Q @ ph.T_W.conj()
    if ph.S_W is not None:
        # γ Q γ S = G Q G S (all real matrices)
        out["J_C"] = 1j * G @ Q @ G @ ph.S_W
    return out


@dataclass(frozen=True, eq=False)
class PseudoSymmetries:
    J: tuple
    ctx: RealStructure
    amplified: bool

    @property
    def s(self) -> int:
        return len(self.J)


def pseudo_syms(cls, ph: PhysicalSymmetries) -> PseudoSymmetries:
    cls = as_class(cls)
    if cls.complex:
        raise InvalidClass("complex classes have no real pseudo-symmetry list")
    if cls != ph.cls:
        raise InvalidClass(f"symmetries built for {ph.cls.label}, asked for {cls.label}")
    b = base_pseudo(ph)
    s = cls.s
    if s <= 3:
        J = [b[k] for k in ("J_T", "J_Q", "J_C")[:s]]
        return PseudoSymmetries(tuple(J), ph.gamma, False)
    J = [np.kron(x, sz) for x in ph.j_W] + [np.kron(np.eye(ph.dim), 1j * sy)]
    J += [np.kron(b[k], sx) for k in ("J_T", "J_Q", "J_C")[: s - 4]]
    ctx = ph.gamma.tensor(RealStructure.trivial(2))
    return PseudoSymmetries(tuple(J), ctx, True)


def pseudo_residual(ps: PseudoSymmetries) -> float:
    """Max residual of the Cl_{0,s} relations, unitarity and reality."""
    G = ps.ctx.G
    res = 0.0
    for a, x in enumerate(ps.J):
        n = len(x)
        res = max(res, opnorm(x @ x + np.eye(n)), opnorm(x.conj().T @ x - np.eye(n)),
                  opnorm(G @ x.conj() @ G.conj().T - x))
        for y in ps.J[a + 1:]:
            res = max(res, opnorm(x @ y + y @ x))
    return res


# ----------------------------------------------------------------- classification


def _commutes(A, B, tol):
    return opnorm(A @ B - B @ A) < tol


def symmetry_residuals(H: np.ndarray, ph: PhysicalSymmetries) -> dict:
    """How far H is from commuting with each generator of the class."""
    res = {}
    gens = ph.cls.generators
    if "T" in gens:
        res["T"] = opnorm(ph.T_W @ H.conj() - H @ ph.T_W)
    if "iQ" in gens:
        res["iQ"] = opnorm(ph.Q @ H - H @ ph.Q)
    if "j" in gens:
        res["j"] = max(opnorm(x @ H - H @ x) for x in ph.j_W)
    if "C" in gens:
        M = ph.C_W
        res["C"] = opnorm(M @ H.conj() - H @ M)
    return res


@dataclass(frozen=True)
class ClassifyResult:
    commutes_with_symmetries: bool
    J_anticommutes_with_pseudosyms: bool
    residuals: dict

    @property
    def agree(self) -> bool:
        return self.commutes_with_symmetries == self.J_anticommutes_with_pseudosyms


def pseudo_residuals_of(J: np.ndarray, cls: SymmetryClass, ph: PhysicalSymmetries) -> dict:
    res = {}
    if cls.complex:
        res["Q"] = opnorm(J @ ph.Q - ph.Q @ J)
        if cls.label == "AIII":
            Jc = base_pseudo(ph)["J_C"]
            res["J_C"] = opnorm(J @ Jc + Jc @ J)
        return res
    ps = pseudo_syms(cls, ph)
    X = np.kron(J, sx) if ps.amplified else J
    for a, y in enumerate(ps.J):
        res[f"J{a + 1}"] = opnorm(X @ y + y @ X)
    return res


def classify(H, ph: PhysicalSymmetries, cls=None, tol: float = DEFAULT_TOL,
             gap_tol: float = 1e-8) -> ClassifyResult:
    cls = as_class(cls or ph.cls)
    Hm = getattr(H, "M", H)
    J = -1j * operator_sign(ph.wrap(Hm), gap_tol).M
    sres = symmetry_residuals(Hm, ph)
    pres = pseudo_residuals_of(J, cls, ph)
    return ClassifyResult(
        all(v < tol for v in sres.values()),
        all(v < tol for v in pres.values()),
        {"symmetries": sres, "pseudo": pres},
    )


def random_compatible_hamiltonian(ph: PhysicalSymmetries, rng: np.random.Generator,
                                  min_gap: float = 0.05, passes: int = 3) -> np.ndarray:
    """Random gapped Nambu Hamiltonian commuting with every symmetry of the class."""
    nW = ph.dim
    G = ph.gamma.G
    for _ in range(100):
        A = rng.normal(size=(nW, nW)) + 1j * rng.normal(size=(nW, nW))
        H = (A + A.conj().T) / 2
        for _ in range(passes):
            H = (H - G @ H.conj() @ G) / 2
            gens = ph.cls.generators
            if "iQ" in gens:
                H = (H + ph.Q @ H @ ph.Q) / 2
            if "j" in gens:
                for x in ph.j_W:
                    H = (H - x @ H @ x) / 2
            if "T" in gens:
                H = (H + ph.T_W @ H.conj() @ ph.T_W.conj().T) / 2
            if "C" in gens:
                M = ph.C_W
                H = (H + M @ H.conj() @ M.conj().T) / 2
            H = (H + H.conj().T) / 2
        if np.min(np.abs(np.linalg.eigvalsh(H))) > min_gap:
            return H
    raise GapClosed("could not draw a gapped compatible Hamiltonian")


# ------------------------------------------------------------------------- SRFL


@dataclass(frozen=True, eq=False)
class SRFLData:
    """First-quantized Hamiltonian with Θ, Ξ (anti-unitary, as U∘conj) and Π (unitary)."""

    h: np.ndarray
    Theta: np.ndarray | None
    Xi: np.ndarray | None
    Pi: np.ndarray | None
    leak: float = 0.0  # how far H is from preserving the reduction subspace


def _square_sign(x: np.ndarray, antilinear: bool, tol: float) -> int:
    sq = x @ x.conj() if antilinear else x @ x
    n = len(x)
    for sgn in (1, -1):
        if opnorm(sq - sgn * np.eye(n)) < tol:
            return sgn
    raise InconsistentSquares("square is not ±1")


def srfl_classify(h: np.ndarray, Theta=None, Xi=None, Pi=None, tol: float = 1e-8) -> str | None:
    """Row of the SRFL table matching the operator squares, or None.

    The symmetry conditions ΘhΘ* = h, ΞhΞ* = -h, ΠhΠ* = -h are required.
    """
    key = (
        0 if Theta is None else _square_sign(Theta, True, tol),
        0 if Xi is None else _square_sign(Xi, True, tol),
        0 if Pi is None else _square_sign(Pi, False, tol),
    )
    if Theta is not None and opnorm(Theta @ h.conj() @ Theta.conj().T - h) > tol:
        return None
    if Xi is not None and opnorm(Xi @ h.conj() @ Xi.conj().T + h) > tol:
        return None
    if Pi is not None and opnorm(Pi @ h @ Pi.conj().T + h) > tol:
        return None
    for label, row in SRFL_TABLE.items():
        if row == key:
            return label
    return None


def _fix_phase_involution(M: np.ndarray) -> np.ndarray:
    sq = M @ M
    lam = np.trace(sq) / len(M)
    return M / np.sqrt(lam)


def _leak(H: np.ndarray, B: np.ndarray) -> float:
    P = B @ B.conj().T
    return opnorm(H @ P - P @ H)


def srfl_data(H: np.ndarray, ph: PhysicalSymmetries) -> SRFLData:
    """Reduce Nambu data of a class to a first-quantized SRFL triple."""
    lab = ph.cls.label
    G = ph.gamma.G
    if lab == "D":
        return SRFLData(H, None, G, None)
    if lab == "DIII":
        Th, Xi = ph.T_W, G
        return SRFLData(H, Th, Xi, 1j * Th @ Xi.conj())
    V = np.eye(ph.dim)[:, ph.v_mask]
    if lab in ("A", "AII", "CII", "AIII"):
        r = lambda X: V.T @ X @ V
        h = r(H)
        Th = r(ph.T_W) if lab in ("AII", "CII") else None
        Pi = r(ph.S_W) if lab in ("CII", "AIII") else None
        Xi = Th @ Pi.conj() if lab == "CII" else None
        return SRFLData(h, Th, Xi, Pi, _leak(H, V))
    # s >= 4: restrict to W~ = ker(j3 - i)
    j1, j2, j3 = ph.j_W
    w, v = np.linalg.eigh(-1j * j3)
    B = v[:, w > 0]
    if lab in ("AI", "BDI"):
        B = _v_part(B, ph.v_mask)
    restrict = lambda X: B.conj().T @ X @ B
    restrict_anti = lambda U: B.conj().T @ U @ B.conj()
    h = restrict(H)
    Th = None
    if "T" in ph.cls.generators:
        Th = restrict_anti(j1 @ ph.T_W)
    Xi = Pi = None
    if lab in ("C", "CI"):
        Xi = restrict_anti(-G @ j2.conj())
    if lab == "CI":
        Pi = _fix_phase_involution(Th @ Xi.conj())
    if lab == "BDI":
        Pi = restrict(ph.S_W)
        Xi = Th @ Pi.conj()
    return SRFLData(h, Th, Xi, Pi, _leak(H, B))


def _orthonormal(v: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(v)
    return q


def _v_part(B: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Orthonormal basis of range(B) ∩ V, V being the coordinates in ``mask``."""
    P = B @ B.conj().T
    PV = P * np.outer(mask, mask)
    w, v = np.linalg.eigh(PV)
    return v[:, w > 0.5]


def srfl_label(H: np.ndarray, ph: PhysicalSymmetries, tol: float = 1e-8) -> str | None:
    """SRFL row of H after the class's reduction; None if H breaks the reduction."""
    d = srfl_data(H, ph)
    if d.leak > tol:
        return None
    return srfl_classify(d.h, d.Theta, d.Xi, d.Pi, tol)


# ----------------------------------------------------------- two pseudo-symmetries


@dataclass(frozen=True, eq=False)
class TwoPSReduction:
    ctx: RealStructure
    phi: np.ndarray
    x1_image: np.ndarray
    x2_image: np.ndarray
    B_plus: np.ndarray
    residuals: dict

    def reduce(self, J: np.ndarray) -> np.ndarray:
        """φ* J φ, an operator on W~ ⊗ ℂ²."""
        return self.phi.conj().T @ J @ self.phi

    def split(self, J: np.ndarray) -> np.ndarray:
        """For J anti-commuting with x1, x2: the x with φ*Jφ = x ⊗ iσz."""
        Y = self.reduce(J)
        n = len(Y) // 2
        return Y.reshape(n, 2, n, 2)[:, 0, :, 0] / 1j


def two_ps_reduction(x1: np.ndarray, x2: np.ndarray, ctx: RealStructure,
                     tol: float = DEFAULT_TOL) -> TwoPSReduction:
    n = len(x1)
    G = ctx.G
    for name, x in (("x1", x1), ("x2", x2)):
        r = max(opnorm(x + x.conj().T), opnorm(x.conj().T @ x - np.eye(n)),
                opnorm(G @ x.conj() @ G.conj().T - x))
        if r > tol:
            raise NotAntiCommuting(f"{name} is not a real skew-Hermitian unitary (residual {r:.2e})")
    if opnorm(x1 @ x2 + x2 @ x1) > tol:
        raise NotAntiCommuting("x1 and x2 do not anti-commute")
    x3 = x2 @ x1
    w, v = np.linalg.eigh(-1j * x3)  # -i x3 is Hermitian with eigenvalues ±1
    Bp = v[:, w > 0]
    m = Bp.shape[1]
    phi = np.empty((n, 2 * m), dtype=complex)
    phi[:, 0::2] = Bp
    phi[:, 1::2] = -1j * x1 @ Bp
    U = -Bp.conj().T @ G @ x2.conj() @ Bp.conj()
    kind = "quaternionic"
    img1 = phi.conj().T @ x1 @ phi
    img2 = phi.conj().T @ x2 @ phi
    Im = np.eye(m)
    res = {
        "phi_unitary": opnorm(phi.conj().T @ phi - np.eye(2 * m)),
        "x1": opnorm(img1 - np.kron(Im, 1j * sx)),
        "x2": opnorm(img2 - np.kron(Im, 1j * sy)),
        "T_square": opnorm(U @ U.conj() + Im),
        "gamma": opnorm(phi @ np.kron(U, 1j * sy) @ phi.T - G),
    }
    if max(res.values()) > tol:
        raise NotAntiCommuting(f"reduction failed: {res}")
    return TwoPSReduction(RealStructure(U, kind), phi, img1, img2, Bp, res)


def diii_block(J: np.ndarray, ph: PhysicalSymmetries) -> dict:
    """Off-diagonal block of a DIII vacuum between the eigenspaces of J_T.

    Uses ``γ`` to identify ker(J_T + i) with the conjugate of ker(J_T - i).
    """
    JT = base_pseudo(ph)["J_T"]
    G = ph.gamma.G
    w, v = np.linalg.eigh(-1j * JT)
    Bp = v[:, w > 0]
    Bm = G @ Bp.conj()
    u = Bm.conj().T @ J @ Bp
    m = u.shape[0]
    return {
        "u": u,
        "unitary": opnorm(u.conj().T @ u - np.eye(m)),
        "skew": opnorm(u + u.T),
        "image_ok": opnorm(Bm @ Bm.conj().T @ J @ Bp - J @ Bp),
    }


__all__ = [
    "SymmetryClass", "PhysicalSymmetries", "PseudoSymmetries", "ClassifyResult", "SRFLData",
    "TwoPSReduction", "DimensionNotDivisible", "InvalidClass", "InconsistentSquares",
    "NotAntiCommuting", "REAL_CLASSES", "COMPLEX_CLASSES", "ALL_CLASSES", "SRFL_TABLE",
    "build_physical", "physical_residuals", "base_pseudo", "pseudo_syms", "pseudo_residual",
    "classify", "symmetry_residuals", "random_compatible_hamiltonian", "srfl_classify",
    "srfl_data", "srfl_label", "two_ps_reduction", "diii_block", "as_class", "extend_linear",
]
