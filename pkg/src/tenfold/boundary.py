"""Half-space side: compression ``Ĵ = qJq``, edge census, chiral Toeplitz index, bulk-boundary checks.

A finite slab has two edges.  "Right" is the large-coordinate edge; positive
chirality is the +1 eigenspace of the chiral operator.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import StructuredMatrix, TenfoldError, opnorm
from .invariants import (
    NotChiral,
    charge_conserving,
    chern_2d,
    chiral_operator,
    pfaffian_z2,
    sector_matrix,
    winding_1d,
)
from .lattice import (
    PERIODIC,
    DisorderConfig,
    LatticeModel,
    assemble,
    bloch_gap,
    coords,
    disorder,
    fit_decay,
    flatten,
    gap,
    kernel_decay,
    make_model,
)
from .symmetry import as_class, build_physical, pseudo_syms


class SlabTooThin(TenfoldError):
    """The slab is shorter than 8 decay lengths of the bulk kernel."""


THIN_FACTOR = 8.0


# ------------------------------------------------------------------ compression


@dataclass(frozen=True, eq=False)
class HalfSpaceOperator:
    Jhat: StructuredMatrix
    direction: int
    slab_L: int
    model: LatticeModel
    keep: np.ndarray  # indices of the torus coordinates kept
    coord: np.ndarray  # coordinate along ``direction`` for each kept index, 0..slab_L-1
    xi: float
    defect_fit: object = None

    @property
    def defect(self) -> np.ndarray:
        M = self.Jhat.M
        return M @ M + np.eye(len(M))

    def residuals(self, tol: float = 1e-10) -> dict:
        M = self.Jhat.M
        G = self.Jhat.ctx.G
        res = {
            "real": opnorm(G @ M.conj() @ G.conj().T - M),
            "skew": opnorm(M + M.conj().T),
        }
        cls = as_class(self.model.cls)
        if not cls.complex:
            ph = build_physical(self.model.internal.n_V, cls, self.n_sites)
            ps = pseudo_syms(cls, ph)
            X = np.kron(M, np.array([[0, 1], [1, 0]])) if ps.amplified else M
            res["pseudo"] = max((opnorm(X @ y + y @ X) for y in ps.J), default=0.0)
        return res

    @property
    def n_sites(self) -> int:
        return len(self.keep) // self.model.nW

    def defect_profile(self) -> tuple:
        """Max row-block norm of the defect at each distance n from the nearest boundary."""
        D = self.defect
        dist = np.minimum(self.coord, self.slab_L - 1 - self.coord)
        rows = np.linalg.norm(D, axis=1)
        ns = np.arange(0, self.slab_L // 2)
        vals = np.array([rows[dist == n].max() if np.any(dist == n) else 0.0 for n in ns])
        return ns, vals


def _slab_indices(model: LatticeModel, direction: int, side: str):
    c = coords(model.d, model.L)
    half = model.L // 2
    inside = c[:, direction] < half if side == "lower" else c[:, direction] >= half
    sites = np.nonzero(inside)[0]
    nW = model.nW
    keep = (sites[:, None] * nW + np.arange(nW)[None, :]).ravel()
    cc = c[sites, direction] - (0 if side == "lower" else half)
    return keep, np.repeat(cc, nW), half


def szego_compress(J, model: LatticeModel, direction: int = 0, side: str = "lower",
                   xi: float | None = None, check_thin: bool = True) -> HalfSpaceOperator:
    """Literal compression of a torus vacuum onto half of the torus.

    The slab has length ``model.L // 2`` along ``direction``.  Raises
    SlabTooThin when that length is below 8 kernel decay lengths.
    """
    M = getattr(J, "M", J)
    keep, cc, half = _slab_indices(model, direction, side)
    if xi is None:
        fit = kernel_decay(M, model.d, model.L)
        xi = fit.xi if np.isfinite(fit.xi) else 0.0
    if check_thin and half < THIN_FACTOR * xi:
        raise SlabTooThin(f"slab length {half} < {THIN_FACTOR:g}·ξ = {THIN_FACTOR * xi:.2f}")
    Jh = M[np.ix_(keep, keep)]
    n_sites = len(keep) // model.nW
    hso = HalfSpaceOperator(StructuredMatrix(Jh, model.internal.gamma.tiled(n_sites)), direction, half,
                            model, keep, cc, float(xi))
    ns, vals = hso.defect_profile()
    object.__setattr__(hso, "defect_fit", fit_decay(ns, vals))
    return hso


def slab_hamiltonian(model: LatticeModel, dis: DisorderConfig | None, direction: int = 0,
                     side: str = "lower") -> tuple:
    """Pipeline (b): the open-slab Hamiltonian on the same half of the torus.

    Cutting every bond that crosses the two planes between the halves is the
    same as taking the principal block of the torus Hamiltonian, provided the
    hopping range is below half the torus.  Returns (H_slab, coordinate per index).
    """
    if model.range >= model.L // 2:
        raise SlabTooThin("hopping range too long for the slab")
    H = assemble(model, dis, PERIODIC).M
    keep, cc, _ = _slab_indices(model, direction, side)
    return H[np.ix_(keep, keep)], cc


# ------------------------------------------------------------------ census


@dataclass(frozen=True)
class EdgeMode:
    E: float
    edge: str
    weight: float
    chirality: float | None = None


@dataclass(frozen=True)
class EdgeCensus:
    modes: tuple
    bulk_gap: float
    spectral_gap: float  # smallest |E| of the operator

    def count(self, edge: str) -> int:
        return sum(1 for m in self.modes if m.edge == edge)

    def signed(self, edge: str) -> int:
        return int(round(sum(np.sign(m.chirality) for m in self.modes
                             if m.edge == edge and m.chirality is not None)))

    @property
    def empty(self) -> bool:
        return len(self.modes) == 0

    def rows(self) -> list:
        return [asdict(m) for m in self.modes]


def _clusters(E: np.ndarray, tol: float) -> list:
    order = np.argsort(E)
    groups, cur = [], [order[0]] if len(order) else []
    for a, b in zip(order, order[1:]):
        if E[b] - E[a] < tol:
            cur.append(b)
        else:
            groups.append(cur)
            cur = [b]
    if cur:
        groups.append(cur)
    return groups


def edge_spectrum(Hop: np.ndarray, coord: np.ndarray, slab_L: int, bulk_gap: float,
                  chiral: np.ndarray | None = None, window: float = 0.5,
                  cluster_tol: float | None = None) -> EdgeCensus:
    """In-gap boundary-localized modes of a Hermitian slab operator.

    In-gap eigenvalues are grouped by |E| (edge modes of a thin slab hybridize
    into ±E pairs) and the left-half projector is diagonalized inside each
    group, so a hybridized pair is split into its left and right parts.
    """
    E, V = np.linalg.eigh(Hop)
    spectral_gap = float(np.min(np.abs(E))) if len(E) else float("inf")
    inside = np.abs(E) < window * bulk_gap
    if cluster_tol is None:
        cluster_tol = 1e-3 * bulk_gap
    left_q = coord < slab_L / 4
    right_q = coord >= 3 * slab_L / 4
    left_h = (coord < slab_L / 2).astype(float)
    modes = []
    idx = np.nonzero(inside)[0]
    if len(idx):
        for grp in _clusters(np.abs(E[idx]), cluster_tol):
            sel = idx[grp]
            sub = V[:, sel]
            if len(sel) > 1:
                w, u = np.linalg.eigh(sub.conj().T @ (left_h[:, None] * sub))
                sub = sub @ u
            for a in range(sub.shape[1]):
                vec = sub[:, a]
                p = np.abs(vec) ** 2
                wl, wr = float(p[left_q].sum()), float(p[right_q].sum())
                if max(wl, wr) <= 0.5:
                    continue
                edge = "left" if wl > wr else "right"
                chi = None
                if chiral is not None:
                    chi = float(np.real(vec.conj() @ chiral @ vec))
                energy = float(np.real(vec.conj() @ Hop @ vec))
                modes.append(EdgeMode(energy, edge, max(wl, wr), chi))
    return EdgeCensus(tuple(modes), float(bulk_gap), spectral_gap)


def census_from_hso(hso: HalfSpaceOperator, chiral: np.ndarray | None = None) -> EdgeCensus:
    """Census of ``iĴ``; its bulk spectrum sits at ±1."""
    return edge_spectrum(1j * hso.Jhat.M, hso.coord, hso.slab_L, 1.0, chiral)


# ------------------------------------------------------------------ Toeplitz


@dataclass(frozen=True)
class ToeplitzIndex:
    right: int
    left: int
    n_plus: dict
    n_minus: dict
    threshold: float
    singular_values: tuple

    def edge(self, which: str) -> int:
        return self.right if which == "right" else self.left


def _near_kernel_edges(vecs: np.ndarray, coord: np.ndarray, slab_L: int) -> dict:
    """Split a near-kernel subspace into left and right pieces by localization."""
    out = {"left": 0, "right": 0, "bulk": 0}
    if vecs.shape[1] == 0:
        return out
    right_h = (coord >= slab_L / 2).astype(float)
    w, u = np.linalg.eigh(vecs.conj().T @ (right_h[:, None] * vecs))
    for wr in w:
        if wr > 0.5:
            out["right"] += 1
        elif wr < 0.5:
            out["left"] += 1
        else:
            out["bulk"] += 1
    return out


def toeplitz_index(Jhat: np.ndarray, K1: np.ndarray, coord: np.ndarray, slab_L: int,
                   xi: float = 0.0, tol: float = 1e-8) -> ToeplitzIndex:
    """Edge-resolved index n₊ - n₋ of ``ĴK₁ = [[0, û*], [û, 0]]`` in the K₁ eigenbasis.

    ``û`` maps the +1 eigenspace of K₁ to the -1 eigenspace.  Near-kernel
    threshold: max(1e-6, 10·e^{-L/ξ}).
    """
    if opnorm(Jhat @ K1 + K1 @ Jhat) > tol:
        raise NotChiral("Ĵ does not anti-commute with the chiral operator")
    w, v = np.linalg.eigh(K1)
    plus, minus = v[:, w > 0], v[:, w < 0]
    u = minus.conj().T @ Jhat @ plus
    thr = max(1e-6, 10 * math.exp(-slab_L / xi)) if xi > 0 else 1e-6
    U, s, Vh = np.linalg.svd(u)
    ker_u = plus @ Vh.conj().T[:, s < thr]  # + vectors killed by û
    ker_us = minus @ U[:, s < thr]  # - vectors killed by û*
    np_ = _near_kernel_edges(ker_u, coord, slab_L)
    nm_ = _near_kernel_edges(ker_us, coord, slab_L)
    return ToeplitzIndex(np_["right"] - nm_["right"], np_["left"] - nm_["left"], np_, nm_,
                         thr, tuple(np.sort(s)[:4]))


def sector_hso(hso: HalfSpaceOperator) -> tuple:
    """(Ĵ, coord) restricted to V for charge-conserving classes."""
    m = hso.model
    if not charge_conserving(m):
        return hso.Jhat.M, hso.coord
    nV = m.internal.n_V
    mask = np.tile(np.r_[np.ones(nV, bool), np.zeros(nV, bool)], hso.n_sites)
    return hso.Jhat.M[np.ix_(mask, mask)], hso.coord[mask]


def hso_toeplitz(hso: HalfSpaceOperator) -> ToeplitzIndex:
    Jh, cc = sector_hso(hso)
    K1 = chiral_operator(hso.model, hso.n_sites)
    return toeplitz_index(Jh, K1, cc, hso.slab_L, hso.xi)


def left_right_compare(J, model: LatticeModel, direction: int = 0) -> tuple:
    """(index on the right edge, index on the left edge) of the compressed vacuum."""
    hso = szego_compress(J, model, direction)
    t = hso_toeplitz(hso)
    return t.right, t.left


# ------------------------------------------------------------------ spectral flow


def cylinder_hamiltonian(model: LatticeModel, ky: float, dis=None) -> np.ndarray:
    """V-sector (or W) Bloch Hamiltonian of a cylinder open along x with momentum ky."""

    L = model.L
    nW = model.nW
    H = np.zeros((L * nW, L * nW), dtype=complex)
    for x, t in model.full_hoppings().items():
        dx, dy = x
        ph = np.exp(1j * ky * dy)
        n = model.internal.n_V
        blk = t.copy()
        blk[:n] *= ph
        blk[n:] *= np.conj(ph)
        for j in range(L):
            i = j + dx
            if 0 <= i < L:
                H[i * nW:(i + 1) * nW, j * nW:(j + 1) * nW] += blk
    return sector_matrix(model, H, L)


def spectral_flow(model: LatticeModel, n_ky: int = 24) -> dict:
    """Signed number of occupied-state jumps in each edge region as k_y winds once."""
    L = model.L
    per = model.internal.n_V if charge_conserving(model) else model.nW
    xc = np.repeat(np.arange(L), per)
    left = (xc < L / 2).astype(float)
    kys = 2 * np.pi * (np.arange(n_ky + 1) + 0.5) / n_ky  # offset avoids edge crossings at ky = 0, π
    NL, NR, gaps = [], [], []
    for ky in kys:
        h = cylinder_hamiltonian(model, ky)
        E, V = np.linalg.eigh(h)
        occ = V[:, E < 0]
        nl = float(np.sum(left[:, None] * np.abs(occ) ** 2))
        NL.append(nl)
        NR.append(occ.shape[1] - nl)
        gaps.append(float(np.min(np.abs(E))))
    jl = [int(round(b - a)) for a, b in zip(NL, NL[1:])]
    jr = [int(round(b - a)) for a, b in zip(NR, NR[1:])]
    return {"left": -sum(jl), "right": -sum(jr), "left_branches": sum(abs(j) for j in jl),
            "right_branches": sum(abs(j) for j in jr), "min_abs_E": min(gaps)}


# ------------------------------------------------------------------ bulk-boundary


@dataclass
class BBRow:
    model: str
    cls: str
    params: dict
    seed: int | None
    strength: float
    bulk_kind: str
    bulk: int | None
    boundary_right: int | None
    boundary_left: int | None
    bulk_gap: float
    slab_gap: float | None
    census_right: int | None
    census_left: int | None
    flag: str = ""
    cross_check: bool | None = None
    thin: bool = False

    @property
    def evaluated(self) -> bool:
        return self.flag == ""

    @property
    def agree(self) -> bool | None:
        if not self.evaluated:
            return None
        if self.bulk_kind == "pfaffian_z2":
            nontriv = self.bulk == -1
            return (self.boundary_right % 2 == 1) == nontriv and (self.boundary_left % 2 == 1) == nontriv
        return self.bulk == self.boundary_right

    @property
    def antisymmetric(self) -> bool | None:
        if not self.evaluated or self.bulk_kind == "pfaffian_z2":
            return None
        return self.boundary_right + self.boundary_left == 0

    @property
    def trivial_ok(self) -> bool | None:
        """Zero invariant ⟹ gapped slab and empty census; non-zero ⟹ census non-empty."""
        if not self.evaluated:
            return None
        trivial = self.bulk in (0, 1) if self.bulk_kind == "pfaffian_z2" else self.bulk == 0
        empty = (self.census_left + self.census_right) == 0
        if trivial:
            return empty and self.slab_gap >= 0.5 * self.bulk_gap
        return not empty

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(agree=self.agree, antisymmetric=self.antisymmetric, trivial_ok=self.trivial_ok)
        return d


def _bb_point_1d(model: LatticeModel, dis: DisorderConfig | None, gap_floor: float,
                 strict_thin: bool = True) -> BBRow:
    """One bulk-boundary evaluation of a 1D model; ``model.L`` is the torus length.

    A slab shorter than 8ξ is flagged and skipped when ``strict_thin``;
    otherwise it is evaluated and marked ``thin``.
    """
    cls = as_class(model.cls)
    strength = 0.0 if dis is None else dis.strength
    seed = None if dis is None else dis.seed
    kind = "pfaffian_z2" if cls.label == "D" else "winding"
    row = BBRow(model.name, cls.label, dict(model.params), seed, strength, kind,
                None, None, None, float("nan"), None, None, None)
    H = assemble(model, dis)
    g = gap(H)
    row.bulk_gap = g
    if g < gap_floor:
        row.flag = "gap_closed"
        return row
    J = flatten(H)
    try:
        hso = szego_compress(J, model)
    except SlabTooThin:
        if strict_thin:
            row.flag = "slab_too_thin"
            return row
        row.thin = True
        hso = szego_compress(J, model, check_thin=False)
    Hs, cc = slab_hamiltonian(model, dis)
    half = model.L // 2
    ES = np.linalg.eigvalsh(Hs)
    row.slab_gap = float(np.min(np.abs(ES)))
    if kind == "winding":
        row.bulk = winding_1d(model, 64, dis if strength else None).value
        t = hso_toeplitz(hso)
        row.boundary_right, row.boundary_left = t.right, t.left
        S = chiral_operator(model, half)
        Hv = sector_matrix(model, Hs, half)
        mask = np.tile(np.r_[np.ones(model.internal.n_V, bool), np.zeros(model.internal.n_V, bool)], half)
        census = edge_spectrum(Hv, cc[mask], half, g, S)
        row.census_right, row.census_left = census.count("right"), census.count("left")
        row.cross_check = census.signed("right") == t.right and census.signed("left") == t.left
    else:
        row.bulk = pfaffian_z2(model, dis if strength else None).value
        ca = census_from_hso(hso)
        row.boundary_right, row.boundary_left = ca.count("right"), ca.count("left")
        census = edge_spectrum(Hs, cc, half, g)
        row.census_right, row.census_left = census.count("right"), census.count("left")
        row.cross_check = (census.count("right") % 2 == ca.count("right") % 2
                           and census.count("left") % 2 == ca.count("left") % 2)
    return row


def bb_check(model_name: str, params: dict, L: int, strength_factor: float = 0.0,
             seeds=(), gap_floor: float = 1e-6, strict_thin: bool = True) -> list:
    """Bulk-boundary rows for one parameter point: clean, then one row per seed.

    ``L`` is the slab length; the bulk torus has length ``2L``.  Disorder
    strength is ``strength_factor`` times the clean bulk gap.
    """
    model = make_model(model_name, **params).with_size(2 * L)
    rows = [_bb_point_1d(model, None, gap_floor, strict_thin)]
    if strength_factor and seeds:
        g0 = bloch_gap(model, 256)
        for sd in seeds:
            rows.append(_bb_point_1d(model, disorder(model, sd, strength_factor * g0), gap_floor, strict_thin))
    return rows


@dataclass(frozen=True)
class ChernBBReport:
    chern: int
    flow: dict

    @property
    def agree(self) -> bool:
        c = abs(self.chern)
        return self.flow["left_branches"] == c and self.flow["right_branches"] == c

    @property
    def antisymmetric(self) -> bool:
        return self.flow["left"] + self.flow["right"] == 0


def chern_bb_check(model: LatticeModel, grid: int = 24, n_ky: int = 24) -> ChernBBReport:
    return ChernBBReport(chern_2d(model, grid).value, spectral_flow(model, n_ky))


__all__ = [
    "SlabTooThin", "HalfSpaceOperator", "EdgeMode", "EdgeCensus", "ToeplitzIndex", "BBRow",
    "ChernBBReport", "szego_compress", "slab_hamiltonian", "edge_spectrum", "census_from_hso",
    "toeplitz_index", "hso_toeplitz", "left_right_compare", "spectral_flow",
    "cylinder_hamiltonian", "bb_check", "bb_sweep", "chern_bb_check", "sector_hso", "THIN_FACTOR",
]


# ------------------------------------------------------------------ sweeps


def _sweep_task(args):
    name, params, L, factor, seeds, strict = args
    return bb_check(name, params, L, factor, seeds, strict_thin=strict)


def bb_sweep(model_name: str, points: list, L: int, strength_factor: float = 0.0,
             seeds=(), jobs: int = 1, strict_thin: bool = True) -> list:
    """Rows for every parameter dict in ``points``, merged in input order."""
    tasks = [(model_name, dict(p), L, strength_factor, tuple(seeds), strict_thin) for p in points]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as ex:
            chunks = list(ex.map(_sweep_task, tasks))
    else:
        chunks = [_sweep_task(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]
