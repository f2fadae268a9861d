"""Matrix models of the real Clifford algebras Cl_{r,s} and the Van Daele corner picture.

Generators: ``K`` (square +1) and ``J`` (square -1), all unitary and real with
respect to ``ctx``.  :func:`standard_rep` attaches a grading operator by
default; ``graded=False`` returns the smaller ungraded module.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    DEFAULT_TOL,
    RealStructure,
    StructuredMatrix,
    TenfoldError,
    kron,
    opnorm,
    s0,
    sx,
    sy,
    sz,
)

MAX_GENERATORS = 12


class SizeExceeded(TenfoldError):
    pass


class PositiveGeneratorsPresent(TenfoldError):
    pass


class MissingGrading(TenfoldError):
    pass


class RelationFailure(TenfoldError):
    pass


class NotIQPV(TenfoldError):
    pass


class NoReference(TenfoldError):
    pass


@dataclass(frozen=True, eq=False)
class CliffordRep:
    r: int
    s: int
    K: tuple
    J: tuple
    ctx: RealStructure
    Gamma: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.ctx.dim

    @property
    def generators(self) -> list:
        return list(self.K) + list(self.J)

    def truncate(self, r: int, s: int) -> "CliffordRep":
        """Keep the first ``r`` positive and ``s`` negative generators."""
        if r > self.r or s > self.s:
            raise ValueError("cannot truncate to a larger signature")
        return replace(self, r=r, s=s, K=self.K[:r], J=self.J[:s])


def _rep(K, J, G, kind, Gamma=None) -> CliffordRep:
    K = tuple(np.asarray(k, dtype=complex) for k in K)
    J = tuple(np.asarray(j, dtype=complex) for j in J)
    return CliffordRep(len(K), len(J), K, J, RealStructure(G, kind),
                       None if Gamma is None else np.asarray(Gamma, dtype=complex))


def _prod(mats, n):
    out = np.eye(n, dtype=complex)
    for m in mats:
        out = out @ m
    return out


def _neg_ungraded(s: int):
    """Pure negative signature, built from small seeds by the two-step shift."""
    if s == 0:
        return [], np.eye(1), "real"
    if s == 1:
        return [-1j * sy], np.eye(2), "real"
    if s == 2:
        return [1j * sx, 1j * sy], 1j * sy, "quaternionic"
    J2, G2, k2 = _neg_ungraded(2)
    K, Gp, kp = _pos_ungraded(s - 2)
    n = Gp.shape[0]
    w = J2[0] @ J2[1]
    gens = [np.kron(J2[0], np.eye(n)), np.kron(J2[1], np.eye(n))] + [np.kron(w, k) for k in K]
    return gens, np.kron(G2, Gp), "real" if k2 == kp else "quaternionic"


def _pos_ungraded(r: int):
    if r == 0:
        return [], np.eye(1), "real"
    if r == 1:
        return [np.eye(1)], np.eye(1), "real"
    if r == 2:
        return [sz, sx], np.eye(2), "real"
    K2, G2, _ = _pos_ungraded(2)
    J, Gn, kn = _neg_ungraded(r - 2)
    n = Gn.shape[0]
    w = K2[0] @ K2[1]
    gens = [np.kron(K2[0], np.eye(n)), np.kron(K2[1], np.eye(n))] + [np.kron(w, j) for j in J]
    return gens, np.kron(G2, Gn), kn


def _pure_graded(r: int, s: int) -> CliffordRep:
    assert r == 0 or s == 0
    if (r, s) == (1, 0):
        return _rep([sx], [], np.eye(2), "real", sz)
    if (r, s) == (0, 1):
        return _rep([], [-1j * sy], np.eye(2), "real", sz)
    gens, G, kind = _pos_ungraded(r) if s == 0 else _neg_ungraded(s)
    G = np.asarray(G, dtype=complex)
    n = G.shape[0]
    if (r + s) % 2 == 0:
        P = _prod(gens, n)
        Gamma = P if opnorm(P - P.conj().T) < 1e-12 else 1j * P
    else:
        # no grading exists on an odd irreducible module: double it
        gens = [np.kron(g, sz) for g in gens]
        G = np.kron(G, s0)
        Gamma = np.kron(np.eye(n), sx)
    K, J = (gens, []) if s == 0 else ([], gens)
    return _rep(K, J, G, kind, Gamma)


def standard_rep(r: int, s: int, graded: bool = True) -> CliffordRep:
    """Representation of Cl_{r,s}, with a grading operator unless ``graded=False``.

    Mixed signatures reduce to pure ones by (1,1)-periodicity, with the new pair
    ``k = 1⊗σx``, ``j = 1⊗(-iσy)`` appended last and earlier generators twisted
    by ``σz``.  Pure signatures use the two-step shift.  The ungraded variant
    skips the doubling that odd pure signatures need for a grading.
    """
    if r < 0 or s < 0:
        raise ValueError("signature must be non-negative")
    if r + s > MAX_GENERATORS:
        raise SizeExceeded(f"r + s = {r + s} exceeds {MAX_GENERATORS}")
    if r == 0 or s == 0:
        if graded:
            return _pure_graded(r, s)
        gens, G, kind = _pos_ungraded(r) if s == 0 else _neg_ungraded(s)
        return _rep(gens if s == 0 else [], [] if s == 0 else gens, G, kind)
    prev = standard_rep(r - 1, s - 1, graded)
    K = [np.kron(k, sz) for k in prev.K] + [np.kron(np.eye(prev.dim), sx)]
    J = [np.kron(j, sz) for j in prev.J] + [np.kron(np.eye(prev.dim), -1j * sy)]
    Gamma = None if prev.Gamma is None else np.kron(prev.Gamma, sz)
    return _rep(K, J, np.kron(prev.ctx.G, s0), prev.ctx.kind, Gamma)


@dataclass(frozen=True)
class RepReport:
    residual: float
    parts: dict
    passed: bool


def verify_rep(rep: CliffordRep, tol: float = DEFAULT_TOL) -> RepReport:
    n = rep.dim
    one = np.eye(n)
    G = rep.ctx.G
    parts = {"relations": 0.0, "reality": 0.0, "unitarity": 0.0, "grading": 0.0}
    gens = [(k, 1.0) for k in rep.K] + [(j, -1.0) for j in rep.J]
    for a, (ga, sa) in enumerate(gens):
        parts["unitarity"] = max(parts["unitarity"], opnorm(ga.conj().T @ ga - one))
        parts["reality"] = max(parts["reality"], opnorm(G @ ga.conj() @ G.conj().T - ga))
        parts["relations"] = max(parts["relations"], opnorm(ga @ ga - sa * one))
        for gb, _ in gens[a + 1:]:
            parts["relations"] = max(parts["relations"], opnorm(ga @ gb + gb @ ga))
    if rep.Gamma is not None:
        Gm = rep.Gamma
        parts["grading"] = max(opnorm(Gm @ Gm - one), opnorm(Gm - Gm.conj().T))
        for g, _ in gens:
            parts["grading"] = max(parts["grading"], opnorm(Gm @ g + g @ Gm))
    res = max(parts.values()) if parts else 0.0
    return RepReport(res, parts, res < tol)


def volume_element(rep: CliffordRep) -> StructuredMatrix:
    if rep.r > 0:
        raise PositiveGeneratorsPresent("volume element defined for r = 0 only")
    return StructuredMatrix(_prod(rep.J, rep.dim), rep.ctx)


def real_span_basis(rep: CliffordRep) -> list:
    """All Clifford monomials in the generators (a real basis of the image)."""
    gens = rep.generators
    out = []
    for mask in itertools.product((0, 1), repeat=len(gens)):
        out.append(_prod([g for g, m in zip(gens, mask) if m], rep.dim))
    return out


@dataclass(frozen=True)
class Extension:
    extendable: bool
    multiplicities: tuple
    rep: CliffordRep | None = None
    J_new: np.ndarray | None = None


def _polar(Y: np.ndarray) -> np.ndarray:
    U, _, Vh = np.linalg.svd(Y)
    return U @ Vh


def _random_real(ctx: RealStructure, rng: np.random.Generator) -> np.ndarray:
    n = ctx.dim
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    G = ctx.G
    return (A + G @ A.conj() @ G.conj().T) / 2


def anticommutant_projection(Y: np.ndarray, gens) -> np.ndarray:
    """Project onto operators anti-commuting with each (unitary) generator."""
    for g in gens:
        Y = (Y - g @ Y @ g.conj().T) / 2
    return Y


def extend_rep(rep: CliffordRep, seed: int = 0, tol: float = DEFAULT_TOL) -> Extension:
    """Try to add one more negative generator when s ≡ 3 (mod 4).

    Multiplicities of the ω-eigenvalues decide. The intertwiner ``u`` between the
    two eigenspaces is obtained as the unitary polar factor (Procrustes) of the
    off-diagonal block of a random real operator anti-commuting with all ``J_α``.
    """
    if rep.r != 0:
        raise PositiveGeneratorsPresent("extend_rep needs r = 0")
    if rep.s % 4 != 3:
        raise ValueError("extend_rep needs s ≡ 3 (mod 4)")
    w = volume_element(rep).M
    ev, vecs = np.linalg.eigh((w + w.conj().T) / 2)
    plus, minus = vecs[:, ev > 0], vecs[:, ev < 0]
    mult = (plus.shape[1], minus.shape[1])
    if mult[0] != mult[1]:
        return Extension(False, mult)
    rng = np.random.default_rng(seed)
    for _ in range(20):
        Y = _random_real(rep.ctx, rng)
        Y = anticommutant_projection((Y - Y.conj().T) / 2, rep.J)
        v = minus.conj().T @ Y @ plus
        if np.linalg.svd(v, compute_uv=False).min() < 1e-6:
            continue
        u = _polar(v)
        Jn = minus @ u @ plus.conj().T - plus @ u.conj().T @ minus.conj().T
        new = replace(rep, s=rep.s + 1, J=tuple(rep.J) + (Jn,), Gamma=None)
        if verify_rep(new, tol).passed:
            return Extension(True, mult, new, Jn)
    raise RelationFailure("could not build a valid intertwiner")


def direct_sum(a: CliffordRep, b: CliffordRep) -> CliffordRep:
    from scipy.linalg import block_diag

    if (a.r, a.s) != (b.r, b.s) or a.ctx.kind != b.ctx.kind:
        raise ValueError("signatures or structure kinds differ")
    gm = None
    if a.Gamma is not None and b.Gamma is not None:
        gm = block_diag(a.Gamma, b.Gamma)
    return _rep([block_diag(x, y) for x, y in zip(a.K, b.K)],
                [block_diag(x, y) for x, y in zip(a.J, b.J)],
                block_diag(a.ctx.G, b.ctx.G), a.ctx.kind, gm)


def _is_real(M: np.ndarray, ctx: RealStructure, tol=1e-12) -> bool:
    G = ctx.G
    return opnorm(G @ M.conj() @ G.conj().T - M) < tol


def graded_tensor(A: CliffordRep, B: CliffordRep) -> CliffordRep:
    """Graded tensor product; mixed generators anti-commute through a grading twist.

    B's generators are twisted by Γ_A when Γ_A is real. If only Γ_B is real, A's
    generators are twisted instead (an isomorphic model). Otherwise a real twist
    is unavailable and RelationFailure is raised.
    """
    if A.Gamma is None or B.Gamma is None:
        raise MissingGrading("both factors need grading operators")
    if A.r + A.s == 0 and A.dim == 1:
        return B
    if B.r + B.s == 0 and B.dim == 1:
        return A
    nA, nB = A.dim, B.dim
    IA, IB = np.eye(nA), np.eye(nB)
    if _is_real(A.Gamma, A.ctx):
        K = [np.kron(k, IB) for k in A.K] + [np.kron(A.Gamma, k) for k in B.K]
        J = [np.kron(j, IB) for j in A.J] + [np.kron(A.Gamma, j) for j in B.J]
    elif _is_real(B.Gamma, B.ctx):
        K = [np.kron(k, B.Gamma) for k in A.K] + [np.kron(IA, k) for k in B.K]
        J = [np.kron(j, B.Gamma) for j in A.J] + [np.kron(IA, j) for j in B.J]
    else:
        raise RelationFailure("neither grading is real; no real twist available")
    ctx = A.ctx.tensor(B.ctx)
    return _rep(K, J, ctx.G, ctx.kind, np.kron(A.Gamma, B.Gamma))


# ---------------------------------------------------------------- Van Daele picture


@dataclass(frozen=True, eq=False)
class PseudoProjection:
    P: np.ndarray
    Q: tuple
    Pa: tuple
    ctx: RealStructure
    Gamma: np.ndarray
    j1: np.ndarray


def _ambient_check(rep: CliffordRep, amb: CliffordRep):
    if (amb.r, amb.s) != (rep.r, rep.s + 1):
        raise RelationFailure(f"ambient must be Cl_{{{rep.r},{rep.s + 1}}}, got Cl_{{{amb.r},{amb.s}}}")
    if amb.Gamma is None:
        raise MissingGrading("ambient representation needs a grading")
    for x in (rep, amb):
        rep_ok = verify_rep(replace(x, Gamma=None))
        if not rep_ok.passed:
            raise RelationFailure(f"invalid representation, residual {rep_ok.residual:.2e}")


def pseudo_projection(rep: CliffordRep, amb: CliffordRep | None = None) -> PseudoProjection:
    if amb is None:
        amb = standard_rep(rep.r, rep.s + 1)
    _ambient_check(rep, amb)
    nB, m = rep.dim, amb.dim
    one = np.eye(nB * m)
    j1 = amb.J[0]
    sign = (-1) ** rep.s
    Qs = tuple((one + sign * np.kron(Ka, ka @ j1)) / 2 for Ka, ka in zip(rep.K, amb.K))
    Ps = tuple((one + np.kron(Ja, j1 @ amb.J[a + 1])) / 2 for a, Ja in enumerate(rep.J))
    P = _prod(list(Qs) + list(Ps), nB * m)
    ctx = rep.ctx.tensor(amb.ctx)
    return PseudoProjection(P, Qs, Ps, ctx, np.kron(np.eye(nB), amb.Gamma), j1)


def projection_residuals(pp: PseudoProjection) -> dict:
    projs = list(pp.Q) + list(pp.Pa) + [pp.P]
    G = pp.ctx.G
    res = {"idempotent": 0.0, "hermitian": 0.0, "real": 0.0, "commuting": 0.0}
    for a, X in enumerate(projs):
        res["idempotent"] = max(res["idempotent"], opnorm(X @ X - X))
        res["hermitian"] = max(res["hermitian"], opnorm(X - X.conj().T))
        res["real"] = max(res["real"], opnorm(G @ X.conj() @ G.conj().T - X))
        for Y in projs[a + 1:]:
            res["commuting"] = max(res["commuting"], opnorm(X @ Y - Y @ X))
    return res


def iqpv_check(J: np.ndarray, rep: CliffordRep, tol: float = DEFAULT_TOL) -> dict:
    """Residuals of the relations a pseudo-symmetric IQPV must satisfy."""
    G = rep.ctx.G
    n = rep.dim
    res = {
        "real": opnorm(G @ J.conj() @ G.conj().T - J),
        "skew": opnorm(J + J.conj().T),
        "square": opnorm(J @ J + np.eye(n)),
        "anticommute": max([opnorm(J @ g + g @ J) for g in rep.generators], default=0.0),
    }
    return res


def _require_iqpv(J: np.ndarray, rep: CliffordRep, tol: float):
    J = np.asarray(J, dtype=complex)
    if J.shape != (rep.dim, rep.dim):
        raise NotIQPV(f"shape {J.shape} does not match representation dim {rep.dim}")
    for name, val in iqpv_check(J, rep).items():
        if val > tol:
            raise NotIQPV(f"relation {name!r} fails with residual {val:.2e}")
    return J


@dataclass(frozen=True, eq=False)
class ORHUElement:
    X: StructuredMatrix
    P: np.ndarray
    Gamma: np.ndarray

    def residuals(self) -> dict:
        X = self.X.M
        G = self.X.ctx.G
        P = self.P
        return {
            "corner": opnorm(P @ X @ P - X),
            "hermitian": opnorm(X - X.conj().T),
            "real": opnorm(G @ X.conj() @ G.conj().T - X),
            "square": opnorm(X @ X - P),
            "odd": opnorm(self.Gamma @ X + X @ self.Gamma),
        }

    def valid(self, tol: float = DEFAULT_TOL) -> bool:
        return max(self.residuals().values()) < tol


def orhu_map(J, rep: CliffordRep, amb: CliffordRep | None = None, tol: float = DEFAULT_TOL,
             pp: PseudoProjection | None = None) -> ORHUElement:
    """``J ↦ (J⊗j₁)P^{r,s}``."""
    J = _require_iqpv(getattr(J, "M", J), rep, tol)
    pp = pp or pseudo_projection(rep, amb)
    X = np.kron(J, pp.j1) @ pp.P
    return ORHUElement(StructuredMatrix(X, pp.ctx), pp.P, pp.Gamma)


def orhu_inverse(X: ORHUElement, rep: CliffordRep, amb: CliffordRep | None = None) -> np.ndarray:
    """Recover ``J`` from the ``(·)⊗j₁`` component by a partial trace.

    Non-trivial Clifford monomials in the ambient factor are traceless, so
    ``Tr_amb[(1⊗j₁⁻¹)X] = 2^{-(r+s)}·m·J``.
    """
    if amb is None:
        amb = standard_rep(rep.r, rep.s + 1)
    nB, m = rep.dim, amb.dim
    j1inv = amb.J[0].conj().T
    Y = np.kron(np.eye(nB), j1inv) @ X.X.M
    part = np.einsum("iaja->ij", Y.reshape(nB, m, nB, m))
    return part * (2 ** (rep.r + rep.s) / m)


def bulk_representative(J, J_ref, rep: CliffordRep, amb: CliffordRep | None = None,
                        tol: float = DEFAULT_TOL) -> StructuredMatrix:
    J = _require_iqpv(getattr(J, "M", J), rep, tol)
    J_ref = _require_iqpv(getattr(J_ref, "M", J_ref), rep, tol)
    pp = pseudo_projection(rep, amb)
    one = np.eye(pp.P.shape[0])
    X = np.kron(J, pp.j1) @ pp.P + np.kron(J_ref, pp.j1) @ (one - pp.P)
    return StructuredMatrix(X, pp.ctx)


@dataclass(frozen=True, eq=False)
class CornerIso:
    eps: tuple
    u: tuple
    P_eps: tuple
    pp: PseudoProjection
    report: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.eps)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        N = x.shape[0]
        n = self.size
        out = np.zeros((n * N, n * N), dtype=complex)
        for a in range(n):
            left = self.u[a].conj().T @ self.P_eps[a]
            for b in range(n):
                out[a * N:(a + 1) * N, b * N:(b + 1) * N] = left @ x @ self.P_eps[b] @ self.u[b]
        return out

    def inverse(self, y: np.ndarray) -> np.ndarray:
        n = self.size
        N = y.shape[0] // n
        out = np.zeros((N, N), dtype=complex)
        for a in range(n):
            for b in range(n):
                out += self.u[a] @ y[a * N:(a + 1) * N, b * N:(b + 1) * N] @ self.u[b].conj().T
        return out

    def ctx(self) -> RealStructure:
        return RealStructure.trivial(self.size).tensor(self.pp.ctx)


def corner_iso(rep: CliffordRep, amb: CliffordRep | None, J_ref, n_checks: int = 20,
               seed: int = 0, tol: float = 1e-9, rank_check_max: int = 16) -> CornerIso:
    """Explicit isomorphism from the full algebra onto matrices over the corner.

    ε runs over {+,-}^{r+s} in lexicographic order with + first.
    """
    if J_ref is None:
        raise NoReference("a reference IQPV is required")
    if rep.r + rep.s < 1:
        raise NoReference("corner_iso needs r + s ≥ 1")
    J_ref = _require_iqpv(getattr(J_ref, "M", J_ref), rep, DEFAULT_TOL)
    pp = pseudo_projection(rep, amb)
    m = pp.j1.shape[0]
    Im = np.eye(m)
    N = rep.dim * m
    one = np.eye(N)
    flips = [np.kron(Ka @ J_ref, Im) for Ka in rep.K] + [np.kron(Ja @ J_ref, Im) for Ja in rep.J]
    halves = list(pp.Q) + list(pp.Pa)
    eps_all, us, Pe = [], [], []
    for eps in itertools.product((1, -1), repeat=rep.r + rep.s):
        u = one.copy()
        P = one.copy()
        for e, f, h in zip(eps, flips, halves):
            if e < 0:
                u = u @ f
            P = P @ (h if e > 0 else one - h)
        eps_all.append(eps)
        us.append(u)
        Pe.append(P)
    iso = CornerIso(tuple(eps_all), tuple(us), tuple(Pe), pp)
    iso.report.update(_verify_corner(iso, J_ref, n_checks, seed, tol, rank_check_max))
    return iso


def _fro(x: np.ndarray) -> float:
    # Frobenius bounds the operator norm from above and avoids an SVD of the large image
    return float(np.linalg.norm(x))


def _verify_corner(iso: CornerIso, J_ref, n_checks, seed, tol, rank_check_max) -> dict:
    pp = iso.pp
    N = pp.P.shape[0]
    rng = np.random.default_rng(seed)
    G = pp.ctx.G
    Gbig = iso.ctx().G
    res = {"linear": 0.0, "multiplicative": 0.0, "star": 0.0, "real": 0.0, "inverse": 0.0}
    for _ in range(n_checks):
        x = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
        y = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
        a = complex(rng.normal(), rng.normal())
        px, py = iso(x), iso(y)
        res["linear"] = max(res["linear"], _fro(iso(a * x + y) - a * px - py))
        res["multiplicative"] = max(res["multiplicative"], _fro(iso(x @ y) - px @ py))
        res["star"] = max(res["star"], _fro(iso(x.conj().T) - px.conj().T))
        xbar = G @ x.conj() @ G.conj().T
        res["real"] = max(res["real"], _fro(iso(xbar) - Gbig @ px.conj() @ Gbig.conj().T))
        res["inverse"] = max(res["inverse"], _fro(iso.inverse(px) - x))
    n = iso.size
    one = np.eye(N)
    res["unit"] = _fro(iso(one) - np.kron(np.eye(n), pp.P))
    res["partition"] = _fro(sum(iso.P_eps) - one)
    ref = np.kron(J_ref, pp.j1)
    target = np.kron(np.diag([float(np.prod(e)) for e in iso.eps]), ref @ pp.P)
    res["reference"] = _fro(iso(ref) - target)
    if N <= rank_check_max:
        basis = []
        for i in range(N):
            for j in range(N):
                E = np.zeros((N, N), dtype=complex)
                E[i, j] = 1.0
                basis.append(iso(E).ravel())
        res["rank_deficit"] = float(N * N - np.linalg.matrix_rank(np.array(basis), tol=1e-8))
    res["passed"] = all(v < tol for k, v in res.items() if k != "rank_deficit") and \
        res.get("rank_deficit", 0.0) == 0.0
    return res


def random_iqpv(rep: CliffordRep, rng: np.random.Generator) -> np.ndarray:
    """Random real skew unitary squaring to -1 and anti-commuting with all generators."""
    for _ in range(50):
        Y = _random_real(rep.ctx, rng)
        Y = anticommutant_projection((Y - Y.conj().T) / 2, rep.generators)
        if np.linalg.svd(Y, compute_uv=False).min() > 1e-3:
            return _polar(Y)
    raise RelationFailure("no invertible element found in the anti-commutant")


def iqpv_setting(r: int, s: int) -> tuple:
    """(rep, J_ref): the first r, s generators of Cl_{r,s+1} plus its last J as reference."""
    big = standard_rep(r, s + 1, graded=False)
    return big.truncate(r, s), big.J[-1]


__all__ = [
    "CliffordRep", "ORHUElement", "CornerIso", "Extension", "PseudoProjection", "RepReport",
    "SizeExceeded", "PositiveGeneratorsPresent", "MissingGrading", "RelationFailure", "NotIQPV",
    "NoReference", "standard_rep", "verify_rep", "volume_element", "extend_rep", "graded_tensor",
    "pseudo_projection", "projection_residuals", "orhu_map", "orhu_inverse", "bulk_representative",
    "corner_iso", "random_iqpv", "iqpv_setting", "iqpv_check", "real_span_basis", "direct_sum",
    "anticommutant_projection", "kron",
]
