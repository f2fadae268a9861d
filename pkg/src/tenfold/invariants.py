"""Numerical bulk invariants: winding, lattice Chern number, Pfaffian parity, Bott index.

All integer-valued reports keep the raw value and its distance to the nearest
integer.  A report with residual ≥ 0.1 is flagged indeterminate, never rounded
silently.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import GapClosed, TenfoldError
from .lattice import (
    PERIODIC,
    DisorderConfig,
    LatticeModel,
    assemble,
    bloch_gap,
    coords,
)
from .symmetry import build_physical, as_class

INDETERMINATE_RESIDUAL = 0.1


class NotChiral(TenfoldError):
    pass


class NotSkew(TenfoldError):
    pass


@dataclass(frozen=True)
class InvariantReport:
    kind: str
    value: int
    raw: float
    residual: float
    params: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def indeterminate(self) -> bool:
        return not self.residual < INDETERMINATE_RESIDUAL

    def as_dict(self) -> dict:
        d = asdict(self)
        d["indeterminate"] = self.indeterminate
        return d


def _report(kind, raw, params=None, seed=None) -> InvariantReport:
    raw = float(raw)
    val = int(round(raw))
    return InvariantReport(kind, val, raw, abs(raw - val), dict(params or {}), seed)


def _seed(dis):
    return None if dis is None else dis.seed


# ------------------------------------------------------------------ sectors


def charge_conserving(model: LatticeModel) -> bool:
    return "iQ" in as_class(model.cls).generators


def sector_matrix(model: LatticeModel, M: np.ndarray, n_sites: int = 1) -> np.ndarray:
    """Restrict a Nambu operator to V when the class conserves charge."""
    if not charge_conserving(model):
        return M
    mask = np.tile(np.r_[np.ones(model.internal.n_V, bool), np.zeros(model.internal.n_V, bool)], n_sites)
    return M[np.ix_(mask, mask)]


def chiral_operator(model: LatticeModel, n_sites: int = 1) -> np.ndarray:
    """Hermitian unitary chiral operator on the sector used by :func:`winding_1d`.

    Classes with charge and sublattice symmetry use S on V.  Class DIII uses
    ``i·J_T`` on W.
    """
    cls = as_class(model.cls)
    ph = build_physical(model.internal.n_V, cls, n_sites)
    if "C" in cls.generators and "iQ" in cls.generators:
        mask = ph.v_mask
        return ph.S_W[np.ix_(mask, mask)]
    if cls.label == "DIII":
        from .symmetry import base_pseudo

        return 1j * base_pseudo(ph)["J_T"]
    raise NotChiral(f"class {cls.label} has no chiral operator handled here")


def _occupied(h: np.ndarray, gap_tol: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    if np.min(np.abs(w)) < gap_tol:
        raise GapClosed(f"min |E| = {np.min(np.abs(w)):.3e}")
    return v[:, w < 0]


def _flat(h: np.ndarray, gap_tol: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    if np.min(np.abs(w)) < gap_tol:
        raise GapClosed(f"min |E| = {np.min(np.abs(w)):.3e}")
    return (v * np.sign(w)) @ v.conj().T


# ------------------------------------------------------------------ winding


def _phase_winding(dets: np.ndarray) -> tuple:
    """Total phase advance of a closed loop of complex numbers, in turns."""
    steps = np.angle(np.roll(dets, -1) / dets)
    return float(np.sum(steps) / (2 * np.pi)), float(np.max(np.abs(steps)))


def winding_from_blocks(blocks: list) -> tuple:
    dets = np.array([np.linalg.det(b) for b in blocks])
    return _phase_winding(dets)


def winding_1d(model: LatticeModel, k_points: int = 512, dis: DisorderConfig | None = None,
               gap_tol: float = 1e-8, orientation: int = 1) -> InvariantReport:
    """Winding of det of the chiral off-diagonal block ⟨-|sign h|+⟩.

    Clean models use the Bloch matrix; a disordered model uses its whole
    torus as a supercell with a boundary twist θ in place of k.
    """
    if model.d != 1:
        raise ValueError("winding_1d needs d = 1")
    if dis is None or dis.strength == 0.0:
        S = chiral_operator(model)
        mats = lambda k: sector_matrix(model, model.bloch(k))
    else:
        S = chiral_operator(model, model.n_sites)
        mats = lambda k: sector_matrix(model, assemble(model, dis, PERIODIC, twist=(k,)).M, model.n_sites)
    w, v = np.linalg.eigh(S)
    plus, minus = v[:, w > 0], v[:, w < 0]
    ks = 2 * np.pi * np.arange(k_points) / k_points
    if orientation < 0:
        ks = ks[::-1]
    # det⟨-|sign h|+⟩ = det D / |det D| with D = ⟨-|h|+⟩, so the flattening is skipped
    dets = []
    for k in ks:
        D = minus.conj().T @ mats(k) @ plus
        sv = np.linalg.svd(D, compute_uv=False)
        if sv.min() < gap_tol:
            raise GapClosed(f"min |E| = {sv.min():.3e}")
        sgn, _ = np.linalg.slogdet(D)
        dets.append(sgn)
    raw, step = _phase_winding(np.array(dets))
    rep = _report("winding", raw, {**model.params, "k_points": k_points}, _seed(dis))
    if step > np.pi / 2:  # loop too coarsely sampled to trust the branch choice
        return InvariantReport(rep.kind, rep.value, rep.raw, max(rep.residual, 0.5), rep.params, rep.seed)
    return rep


# ------------------------------------------------------------------ Chern


def _link(a: np.ndarray, b: np.ndarray) -> complex:
    z = np.linalg.det(a.conj().T @ b)
    return z / abs(z)


def chern_from_frames(frames: np.ndarray) -> float:
    """Lattice field strength summed over a periodic grid of occupied frames[i][j]."""
    n1, n2 = len(frames), len(frames[0])
    total = 0.0
    for i in range(n1):
        for j in range(n2):
            u = frames[i][j]
            ux = frames[(i + 1) % n1][j]
            uy = frames[i][(j + 1) % n2]
            uxy = frames[(i + 1) % n1][(j + 1) % n2]
            loop = _link(u, ux) * _link(ux, uxy) * _link(uxy, uy) * _link(uy, u)
            total += np.angle(loop)
    return total / (2 * np.pi)


def chern_2d(model: LatticeModel, grid: int = 24, gap_tol: float = 1e-8) -> InvariantReport:
    """Plaquette Chern number of the negative-energy (``ker(J - i)``) bundle.

    Class A uses the V sector; class D uses all of W.
    """
    if model.d != 2:
        raise ValueError("chern_2d needs d = 2")
    if as_class(model.cls).label not in ("A", "D"):
        raise ValueError("chern_2d handles classes A and D")
    ks = 2 * np.pi * np.arange(grid) / grid
    frames = [[_occupied(sector_matrix(model, model.bloch((kx, ky))), gap_tol) for ky in ks] for kx in ks]
    raw = chern_from_frames(frames)
    return _report("chern", raw, {**model.params, "grid": grid})


def chern_refined(model: LatticeModel, start: int = 12, max_grid: int = 96) -> InvariantReport:
    """Double the grid until two successive values agree."""
    prev = chern_2d(model, start)
    g = start
    while g < max_grid:
        g *= 2
        cur = chern_2d(model, g)
        if cur.value == prev.value and not cur.indeterminate:
            return cur
        prev = cur
    return prev


# ------------------------------------------------------------------ Pfaffian


def _householder(x: np.ndarray):
    sigma = np.vdot(x[1:], x[1:]).real
    if sigma == 0:
        return np.zeros_like(x), 0.0, x[0]
    norm_x = math.sqrt(abs(x[0]) ** 2 + sigma)
    phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
    v = x.copy()
    v[0] += phase * norm_x
    v /= np.linalg.norm(v)
    return v, 2.0, -phase * norm_x


def pfaffian(A: np.ndarray) -> complex:
    """Pfaffian of a skew-symmetric matrix by Householder skew tridiagonalization."""
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("square matrix required")
    if n % 2:
        return 0.0
    if n == 0:
        return 1.0
    pf = 1.0 + 0j
    for i in range(n - 2):
        v, tau, alpha = _householder(A[i + 1:, i])
        A[i + 1, i] = alpha
        A[i, i + 1] = -alpha
        A[i + 2:, i] = 0
        A[i, i + 2:] = 0
        w = tau * A[i + 1:, i + 1:] @ v.conj()
        A[i + 1:, i + 1:] += np.outer(v, w) - np.outer(w, v)
        if tau != 0:
            pf *= 1 - tau
        if i % 2 == 0:
            pf *= -alpha
    pf *= A[n - 2, n - 1]
    return pf


def majorana_basis(n_V: int, n_sites: int = 1) -> np.ndarray:
    """Unitary taking site-major Nambu coordinates to Majorana coordinates."""
    om = np.array([[1, 1], [1j, -1j]]) / np.sqrt(2)
    return np.kron(np.eye(n_sites), np.kron(om, np.eye(n_V)))


def majorana_form(H: np.ndarray, n_V: int, n_sites: int = 1, tol: float = 1e-10) -> np.ndarray:
    """Real antisymmetric ``A`` with ``Ω H Ω* = i A``."""
    Om = majorana_basis(n_V, n_sites)
    X = -1j * (Om @ H @ Om.conj().T)
    if np.max(np.abs(X.imag)) > tol or np.max(np.abs(X + X.T)) > tol:
        raise NotSkew("Majorana form is not real antisymmetric")
    return X.real


def pfaffian_z2(model: LatticeModel, dis: DisorderConfig | None = None,
                gap_tol: float = 1e-8) -> InvariantReport:
    """``sign(Pf A(0) · Pf A(π))``: Bloch momenta when clean, boundary twists when disordered."""
    if model.d != 1 or as_class(model.cls).label != "D":
        raise ValueError("pfaffian_z2 needs a class D chain")
    n = model.internal.n_V
    if dis is None or dis.strength == 0.0:
        mats = [model.bloch(0.0), model.bloch(np.pi)]
        sites = 1
    else:
        mats = [assemble(model, dis, PERIODIC, twist=(th,)).M for th in (0.0, np.pi)]
        sites = model.n_sites
    signs = []
    for H in mats:
        if np.min(np.abs(np.linalg.eigvalsh(H))) < gap_tol:
            raise GapClosed("gap closed at a real momentum")
        pf = pfaffian(majorana_form(H, n, sites))
        signs.append(np.sign(pf.real))
    return _report("pfaffian_z2", signs[0] * signs[1], model.params, _seed(dis))


# ------------------------------------------------------------------ Bott


def positions(model: LatticeModel, sector: bool = True) -> np.ndarray:
    """Site coordinates repeated for each internal degree of freedom, shape (dim, d)."""
    c = coords(model.d, model.L)
    per = model.internal.n_V if (sector and charge_conserving(model)) else model.nW
    return np.repeat(c, per, axis=0)


def bott_from_projector(P: np.ndarray, pos: np.ndarray, L: int) -> float:
    one = np.eye(len(P))
    ex = np.exp(2j * np.pi * pos[:, 0] / L)
    ey = np.exp(2j * np.pi * pos[:, 1] / L)
    U = P @ (ex[:, None] * P) + (one - P)
    V = P @ (ey[:, None] * P) + (one - P)
    ev = np.linalg.eigvals(V @ U @ V.conj().T @ U.conj().T)
    return float(np.sum(np.angle(ev)) / (2 * np.pi))


def bott_index(J: np.ndarray, model: LatticeModel, seed: int | None = None) -> InvariantReport:
    """Bott index of ``P = (1 - iJ)/2`` on a torus; V sector for charge-conserving classes.

    Sign chosen to agree with :func:`chern_2d`.
    """
    if model.d != 2:
        raise ValueError("bott_index needs d = 2")
    M = getattr(J, "M", J)
    Js = sector_matrix(model, M, model.n_sites)
    res = np.linalg.norm(Js @ Js + np.eye(len(Js)), 2)
    if res > 1e-6:
        raise GapClosed(f"J² ≠ -1 (residual {res:.2e})")
    P = (np.eye(len(Js)) - 1j * Js) / 2
    raw = -bott_from_projector(P, positions(model), model.L)
    return _report("bott", raw, model.params, seed)


# ------------------------------------------------------------------ groups


KO_POINT = ("Z", "Z2", "Z2", "0", "Z", "0", "0", "0")


@dataclass(frozen=True)
class KRGroupTable:
    d: int
    shift: int
    decomposition: tuple  # ((multiplicity, symbol, degree), ...)
    complex: bool = False

    def summary(self) -> str:
        parts = []
        for mult, sym, _ in self.decomposition:
            if sym == "0" or mult == 0:
                continue
            parts.append(sym if mult == 1 else f"{sym}^{mult}")
        return " ⊕ ".join(parts) if parts else "0"


def expected_group(d: int, r: int, s: int, complex_class: bool = False) -> KRGroupTable:
    """Binomial decomposition over the torus; complex classes use K_s = Z^{2^{d-1}}."""
    if complex_class:
        if d == 0:
            sym = "Z" if s % 2 == 0 else "0"
            return KRGroupTable(0, s % 2, ((1, sym, s % 2),), True)
        return KRGroupTable(d, s % 2, ((2 ** (d - 1), "Z", s % 2),), True)
    shift = (s - r + 2) % 8
    dec = tuple((math.comb(d, i), KO_POINT[(shift - i) % 8], (shift - i) % 8) for i in range(d + 1))
    return KRGroupTable(d, shift, dec)


def class_group(label: str, d: int) -> KRGroupTable:
    cls = as_class(label)
    if cls.complex:
        return expected_group(d, 0, cls.s, True)
    return expected_group(d, 0, cls.s)


# ------------------------------------------------------------------ homotopy


@dataclass(frozen=True)
class HomotopyReport:
    values: tuple  # None where the gap closed
    gaps: tuple
    flagged: tuple
    changes_only_at_flags: bool

    def flips(self) -> int:
        vals = [v for v in self.values if v is not None]
        return sum(1 for a, b in zip(vals, vals[1:]) if a != b)


def homotopy_probe(models: list, invariant, gap_floor: float = 1e-3, n_k: int = 256) -> HomotopyReport:
    """Evaluate ``invariant(model)`` along a path; sample points with bulk gap below ``gap_floor`` are flagged."""
    vals, gaps, flags = [], [], []
    for m in models:
        g = bloch_gap(m, n_k)
        gaps.append(g)
        if g < gap_floor:
            vals.append(None)
            flags.append(True)
            continue
        rep = invariant(m)
        flags.append(rep.indeterminate)
        vals.append(None if rep.indeterminate else rep.value)
    ok = True
    last = None
    crossed_flag = False
    for v, f in zip(vals, flags):
        if f:
            crossed_flag = True
            continue
        if last is not None and v != last and not crossed_flag:
            ok = False
        last, crossed_flag = v, False
    return HomotopyReport(tuple(vals), tuple(gaps), tuple(flags), ok)


__all__ = [
    "InvariantReport", "KRGroupTable", "HomotopyReport", "NotChiral", "NotSkew", "KO_POINT",
    "winding_1d", "winding_from_blocks", "chern_2d", "chern_refined", "chern_from_frames",
    "pfaffian", "pfaffian_z2", "majorana_form", "majorana_basis", "bott_index",
    "bott_from_projector", "positions", "expected_group", "class_group", "homotopy_probe",
    "chiral_operator", "sector_matrix", "charge_conserving",
]
