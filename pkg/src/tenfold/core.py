"""Structured linear algebra on spaces carrying a real or quaternionic structure.

An anti-unitary ``γ = G ∘ conj`` is stored through its linear part ``G``.
Every operator is a dense complex matrix paired with such a structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-10


class TenfoldError(Exception):
    """Base class for library errors."""


class DimensionMismatch(TenfoldError):
    pass


class GapClosed(TenfoldError):
    """An eigenvalue fell below the requested gap tolerance."""


class NotHermitian(TenfoldError):
    pass


def opnorm(a: np.ndarray) -> float:
    """Spectral norm, 0 for empty arrays."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


@dataclass(frozen=True, eq=False)
class RealStructure:
    """Anti-unitary ``G ∘ conj`` with square ``+1`` (real) or ``-1`` (quaternionic)."""

    G: np.ndarray
    kind: str = "real"

    def __post_init__(self):
        G = np.asarray(self.G, dtype=complex)
        object.__setattr__(self, "G", G)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise DimensionMismatch("G must be square")
        if self.kind not in ("real", "quaternionic"):
            raise ValueError(f"unknown kind {self.kind!r}")
        n = G.shape[0]
        # Frobenius bounds the operator norm and avoids an SVD on large lattices
        if np.linalg.norm(G.conj().T @ G - np.eye(n)) > 1e-12 * max(1, n):
            raise ValueError("G is not unitary")
        sign = 1.0 if self.kind == "real" else -1.0
        if np.linalg.norm(G @ G.conj() - sign * np.eye(n)) > 1e-12 * max(1, n):
            raise ValueError(f"G conj(G) does not equal {sign:+.0f}")

    @property
    def dim(self) -> int:
        return self.G.shape[0]

    def tiled(self, n: int) -> "RealStructure":
        """``1_n ⊗ G``; valid whenever ``self`` is, so validation is skipped."""
        out = object.__new__(RealStructure)
        object.__setattr__(out, "G", np.kron(np.eye(n), self.G))
        object.__setattr__(out, "kind", self.kind)
        return out

    @staticmethod
    def trivial(n: int) -> "RealStructure":
        return RealStructure(np.eye(n), "real")

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Act on a vector (or the columns of a matrix)."""
        return self.G @ np.conj(v)

    def tensor(self, other: "RealStructure") -> "RealStructure":
        kind = "real" if self.kind == other.kind else "quaternionic"
        return RealStructure(np.kron(self.G, other.G), kind)


@dataclass(frozen=True, eq=False)
class StructuredMatrix:
    M: np.ndarray
    ctx: RealStructure

    def __post_init__(self):
        M = np.asarray(self.M, dtype=complex)
        object.__setattr__(self, "M", M)
        if M.shape != (self.ctx.dim, self.ctx.dim):
            raise DimensionMismatch(f"matrix shape {M.shape} vs structure dim {self.ctx.dim}")

    @property
    def dim(self) -> int:
        return self.ctx.dim

    def like(self, M: np.ndarray) -> "StructuredMatrix":
        return StructuredMatrix(M, self.ctx)

    def __matmul__(self, other: "StructuredMatrix") -> "StructuredMatrix":
        _same_ctx(self, other)
        return self.like(self.M @ other.M)

    def __add__(self, other: "StructuredMatrix") -> "StructuredMatrix":
        _same_ctx(self, other)
        return self.like(self.M + other.M)

    def __sub__(self, other: "StructuredMatrix") -> "StructuredMatrix":
        _same_ctx(self, other)
        return self.like(self.M - other.M)

    def __neg__(self) -> "StructuredMatrix":
        return self.like(-self.M)

    def scale(self, a: complex) -> "StructuredMatrix":
        return self.like(a * self.M)


def _same_ctx(a: StructuredMatrix, b: StructuredMatrix) -> None:
    if a.ctx is b.ctx:
        return
    if a.ctx.dim != b.ctx.dim or a.ctx.kind != b.ctx.kind or not np.array_equal(a.ctx.G, b.ctx.G):
        raise DimensionMismatch("operators live on different structured spaces")


@dataclass(frozen=True, eq=False)
class NambuContext:
    """``W = V ⊕ V*`` with the block-swap real structure and charge ``Q``."""

    n_V: int
    gamma: RealStructure = field(init=False)
    Q: np.ndarray = field(init=False)

    def __post_init__(self):
        n = self.n_V
        z, one = np.zeros((n, n)), np.eye(n)
        object.__setattr__(self, "gamma", RealStructure(np.block([[z, one], [one, z]]), "real"))
        object.__setattr__(self, "Q", np.diag(np.r_[np.ones(n), -np.ones(n)]).astype(complex))

    @property
    def dim(self) -> int:
        return 2 * self.n_V

    def wrap(self, M: np.ndarray) -> StructuredMatrix:
        return StructuredMatrix(M, self.gamma)


def adjoint(L: StructuredMatrix) -> StructuredMatrix:
    return L.like(L.M.conj().T)


def conjugate(L: StructuredMatrix) -> StructuredMatrix:
    """``γ L γ⁻¹`` as a matrix: ``G conj(M) G*``."""
    G = L.ctx.G
    return L.like(G @ L.M.conj() @ G.conj().T)


def car_transpose(L: StructuredMatrix) -> StructuredMatrix:
    return conjugate(adjoint(L))


def operator_sign(H: StructuredMatrix, gap_tol: float = 1e-8, herm_tol: float = DEFAULT_TOL) -> StructuredMatrix:
    M = H.M
    if opnorm(M - M.conj().T) > herm_tol:
        raise NotHermitian("operator is not Hermitian")
    w, U = np.linalg.eigh((M + M.conj().T) / 2)
    if w.size and np.min(np.abs(w)) < gap_tol:
        raise GapClosed(f"min |eigenvalue| = {np.min(np.abs(w)):.3e} < {gap_tol:.3e}")
    return H.like((U * np.sign(w)) @ U.conj().T)


@dataclass(frozen=True)
class PredicateReport:
    is_real: bool
    is_imaginary: bool
    is_hermitian: bool
    is_skew: bool
    is_unitary: bool
    residuals: dict

    def as_dict(self) -> dict:
        return {
            "is_real": self.is_real,
            "is_imaginary": self.is_imaginary,
            "is_hermitian": self.is_hermitian,
            "is_skew": self.is_skew,
            "is_unitary": self.is_unitary,
            "residuals": dict(self.residuals),
        }


def check_predicates(L: StructuredMatrix, tol: float = DEFAULT_TOL) -> PredicateReport:
    M = L.M
    Mbar = conjugate(L).M
    Mh = M.conj().T
    res = {
        "real": opnorm(Mbar - M),
        "imaginary": opnorm(Mbar + M),
        "hermitian": opnorm(Mh - M),
        "skew": opnorm(Mh + M),
        "unitary": opnorm(Mh @ M - np.eye(L.dim)),
    }
    return PredicateReport(
        is_real=res["real"] < tol,
        is_imaginary=res["imaginary"] < tol,
        is_hermitian=res["hermitian"] < tol,
        is_skew=res["skew"] < tol,
        is_unitary=res["unitary"] < tol,
        residuals=res,
    )


def hamiltonian_residuals(H: StructuredMatrix) -> dict:
    """Residuals of the free-fermion conditions: Hermitian, imaginary, CAR-skew."""
    return {
        "hermitian": opnorm(H.M - H.M.conj().T),
        "imaginary": opnorm(conjugate(H).M + H.M),
        "car_skew": opnorm(car_transpose(H).M + H.M),
    }


def iqpv_residuals(J: StructuredMatrix) -> dict:
    n = J.dim
    M = J.M
    return {
        "real": opnorm(conjugate(J).M - M),
        "skew": opnorm(M.conj().T + M),
        "unitary": opnorm(M.conj().T @ M - np.eye(n)),
        "square": opnorm(M @ M + np.eye(n)),
    }


# Pauli matrices, shared by every module.
s0 = np.eye(2, dtype=complex)
sx = np.array([[0, 1], [1, 0]], dtype=complex)
sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
sz = np.array([[1, 0], [0, -1]], dtype=complex)


def kron(*mats: np.ndarray) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out
