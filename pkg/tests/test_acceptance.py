"""Acceptance criteria C1 to C11.

Each test reports one ``C<n> PASS`` or ``C<n> FAIL`` line through the
``verdict`` fixture; the lines are echoed live and collected again in an
"acceptance criteria" section at the end of the run.
"""

import functools
import sys
import time

import numpy as np
import pytest

from oracles import SX, SY, chern_oracle, kitaev_parity, qwz_h, ssh_winding_oracle
from tenfold import cli
from tenfold.boundary import bb_sweep, chern_bb_check
from tenfold.clifford import (
    bulk_representative,
    corner_iso,
    iqpv_check,
    iqpv_setting,
    orhu_inverse,
    orhu_map,
    random_iqpv,
    real_span_basis,
    standard_rep,
    verify_rep,
    volume_element,
)
from tenfold.core import opnorm
from tenfold.invariants import bott_index, chern_2d, pfaffian_z2, winding_1d
from tenfold.lattice import (
    assemble,
    bloch_gap,
    disorder,
    flatten,
    flatten_residuals,
    kernel_decay,
    kitaev_chain,
    p_ip,
    qwz,
    ssh,
    translate_config,
    translate_operator,
)
from tenfold.symmetry import (
    ALL_CLASSES,
    build_physical,
    classify,
    random_compatible_hamiltonian,
    srfl_label,
)


# ---------------------------------------------------------------- C1


def test_c1_clifford(verdict):
    t0 = time.perf_counter()
    worst = max(verify_rep(standard_rep(r, n - r)).residual for n in range(9) for r in range(n + 1))
    rep = standard_rep(1, 1)
    exact = np.array_equal(rep.K[0], SX) and np.array_equal(rep.J[0], -1j * SY)
    omega_ok = True
    for s in (3, 7):
        r = standard_rep(0, s)
        w = volume_element(r).M
        omega_ok &= opnorm(w @ w - np.eye(r.dim)) < 1e-12
        omega_ok &= max(opnorm(w @ j - j @ w) for j in r.J) < 1e-12
    q = standard_rep(0, 2)
    i, j = q.J
    k = i @ j
    quat = len(real_span_basis(q)) == 4 and all(opnorm(u @ u + np.eye(2)) < 1e-12 for u in (i, j, k))
    quat &= opnorm(j @ k - i) < 1e-12 and opnorm(k @ i - j) < 1e-12
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and exact and omega_ok and quat and dt < 10
    verdict("C1", ok, f"max residual {worst:.1e}, {dt:.1f}s")


# ---------------------------------------------------------------- C2


def test_c2_orhu(verdict):
    t0 = time.perf_counter()
    sigs = [(r, n - r) for n in range(5) for r in range(n + 1)]
    rng = np.random.default_rng(2024)
    worst, count, dims_ok = 0.0, 0, True
    while count < 100:
        r, s = sigs[count % len(sigs)]
        rep, Jref = iqpv_setting(r, s)
        dims_ok &= rep.dim <= 16
        J = random_iqpv(rep, rng)
        assert max(iqpv_check(J, rep).values()) < 1e-10
        X = orhu_map(J, rep)
        Xm, P, G = X.X.M, X.P, X.X.ctx.G
        # the corner P X P has unit P, so X squares to P rather than to 1
        worst = max(worst, opnorm(Xm @ Xm - P), opnorm(Xm - Xm.conj().T), opnorm(P @ Xm @ P - Xm),
                    opnorm(G @ Xm.conj() @ G.conj().T - Xm), opnorm(X.Gamma @ Xm + Xm @ X.Gamma),
                    opnorm(orhu_inverse(X, rep) - J))
        worst = max(worst, 0.0 if X.valid(1e-10) else 1.0)
        B = bulk_representative(J, Jref, rep).M
        worst = max(worst, opnorm(B @ B - np.eye(len(B))))
        count += 1
    mult = 0.0
    for r, s in [(r, n - r) for n in range(1, 4) for r in range(n + 1)]:
        rep, Jref = iqpv_setting(r, s)
        iso = corner_iso(rep, None, Jref, n_checks=50, seed=r * 10 + s, rank_check_max=0)
        mult = max(mult, iso.report["multiplicative"])
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and mult < 1e-9 and dims_ok and dt < 60
    verdict("C2", ok, f"100 IQPVs residual {worst:.1e}, corner mult {mult:.1e}, {dt:.1f}s")


# ---------------------------------------------------------------- C3


def test_c3_dictionary(verdict):
    mismatches, srfl_bad, positives = 0, 0, 0
    for label in ALL_CLASSES:
        ph = build_physical(8, label)
        assert ph.dim <= 64
        for seed in range(5):
            H = random_compatible_hamiltonian(ph, np.random.default_rng(seed))
            res = classify(H, ph)
            positives += res.commutes_with_symmetries
            mismatches += res.commutes_with_symmetries != res.J_anticommutes_with_pseudosyms
            srfl_bad += srfl_label(H, ph) != label
        if label != "D":
            G = random_compatible_hamiltonian(build_physical(8, "D"), np.random.default_rng(99))
            res = classify(G, ph)
            mismatches += res.commutes_with_symmetries != res.J_anticommutes_with_pseudosyms
            mismatches += res.commutes_with_symmetries  # a generic H must fail here
    ok = mismatches == 0 and srfl_bad == 0 and positives == 5 * len(ALL_CLASSES)
    verdict("C3", ok, f"{len(ALL_CLASSES)} classes, mismatches {mismatches}, SRFL mismatches {srfl_bad}")


# ---------------------------------------------------------------- C4


def test_c4_covariance(verdict):
    rng = np.random.default_rng(4)
    ctors = [lambda L: kitaev_chain(mu=0.7, L=L), lambda L: ssh(L=L), lambda L: ssh(L=L, spinful=True),
             lambda L: qwz(L=L // 3), lambda L: p_ip(L=L // 3)]
    exact = 0
    for i in range(20):
        m = ctors[i % len(ctors)](int(rng.integers(12, 25)))
        dis = disorder(m, int(rng.integers(0, 2**31)), float(rng.uniform(0.1, 1.0)))
        x = [int(v) for v in rng.integers(-m.L, m.L, size=m.d)]
        lhs = translate_operator(assemble(m, dis).M, m.d, m.L, x, m.nW)
        rhs = assemble(m, translate_config(dis, x)).M
        exact += lhs.tobytes() == rhs.tobytes()
    verdict("C4", exact == 20, f"{exact}/20 byte-identical")


# ---------------------------------------------------------------- C5


def test_c5_flattening(verdict):
    zoo = [kitaev_chain(L=40), kitaev_chain(mu=3.0, L=40), ssh(L=40), ssh(2.0, 1.0, L=40),
           ssh(L=40, spinful=True), qwz(L=12), qwz(-1.0, L=12), p_ip(L=12), p_ip(mu=-1.0, L=12)]
    worst, r2_min, finite = 0.0, 1.0, True
    for m in zoo:
        J = flatten(assemble(m))
        worst = max(worst, max(flatten_residuals(J).values()))
        fit = kernel_decay(J, m.d, m.L)
        finite &= fit.ok
        r2_min = min(r2_min, fit.r2)
    ok = worst < 1e-10 and finite and r2_min > 0.95
    verdict("C5", ok, f"{len(zoo)} models, residual {worst:.1e}, min R² {r2_min:.3f}")


# ---------------------------------------------------------------- C6


def test_c6_bulk_invariants(verdict):
    bad, resid = [], 0.0
    for v in np.round(np.linspace(0.0, 2.0, 21), 3):
        if abs(v - 1.0) < 1e-9:
            continue
        rep = winding_1d(ssh(v, 1.0))
        resid = max(resid, rep.residual)
        if rep.value != round(ssh_winding_oracle(v, 1.0)):
            bad.append(("ssh", v))
    mus = np.round(np.arange(-3.0, 3.01, 0.1), 2)
    for mu in mus:
        if abs(abs(mu) - 2.0) < 1e-9:
            continue
        rep = pfaffian_z2(kitaev_chain(1.0, 1.0, mu))
        if rep.value != kitaev_parity(1.0, mu):
            bad.append(("kitaev", mu))
    for u in (-3.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 3.0):
        rep = chern_2d(qwz(u), 24)
        resid = max(resid, rep.residual)
        if rep.value != round(chern_oracle(lambda kx, ky: qwz_h(u, kx, ky), 96)):
            bad.append(("chern", u))
    for u in (-3.0, -2.5, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.5, 3.0):
        m = qwz(u, L=10)
        b = bott_index(flatten(assemble(m)).M, m)
        resid = max(resid, b.residual)
        if b.value != chern_2d(m).value:
            bad.append(("bott", u))
    ok = not bad and resid < 0.01
    verdict("C6", ok, f"failures {bad}, max residual {resid:.1e}")


# ---------------------------------------------------------------- C7, C8, C10

SSH_POINTS = [{"v": float(v), "w": 1.0} for v in np.round(np.linspace(0.5, 2.0, 11), 6)]
KITAEV_POINTS = [{"mu": float(mu)} for mu in np.round(np.linspace(-3.0, 3.0, 13), 6)]
QWZ_MASSES = (-3.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 3.0)


@functools.lru_cache(maxsize=1)
def bb_runs():
    t0 = time.perf_counter()
    rows = bb_sweep("ssh", SSH_POINTS, 60, 0.3, range(20), strict_thin=False)
    rows += bb_sweep("kitaev", KITAEV_POINTS, 60, 0.3, range(20), strict_thin=False)
    chern = [chern_bb_check(qwz(u, L=24), 24, 24) for u in QWZ_MASSES]
    return rows, chern, time.perf_counter() - t0


def test_c7_bulk_boundary(verdict):
    rows, chern, dt = bb_runs()
    ev = [r for r in rows if r.evaluated]
    skipped = {r.flag for r in rows if not r.evaluated}
    gapped_skipped = [r for r in rows if not r.evaluated and r.bulk_gap >= 1e-6]
    agree = sum(bool(r.agree) for r in ev)
    cross = sum(bool(r.cross_check) for r in ev)
    chern_ok = all(c.agree for c in chern)
    ok = agree == len(ev) == cross and not gapped_skipped and chern_ok and dt < 600
    verdict("C7", ok, f"{agree}/{len(ev)} rows agree, {len(rows) - len(ev)} skipped {sorted(skipped)}, "
            f"{sum(r.thin for r in ev)} thin slabs, QWZ {sum(c.agree for c in chern)}/{len(chern)}, {dt:.0f}s")


def test_c8_antisymmetry(verdict):
    rows, chern, _ = bb_runs()
    ev = [r for r in rows if r.evaluated]
    # Z-valued rows: right + left = 0; Z2 rows: right + left = 0 mod 2
    good = sum((r.boundary_right + r.boundary_left) % 2 == 0 if r.bulk_kind == "pfaffian_z2"
               else r.antisymmetric for r in ev)
    chern_ok = all(c.antisymmetric for c in chern)
    verdict("C8", good == len(ev) and chern_ok, f"{good}/{len(ev)} rows, QWZ flows antisymmetric {chern_ok}")


def test_c10_triviality(verdict):
    rows, _, _ = bb_runs()
    ev = [r for r in rows if r.evaluated]
    good = sum(bool(r.trivial_ok) for r in ev)
    trivial = sum(r.bulk in ((0,) if r.bulk_kind == "winding" else (1,)) for r in ev)
    verdict("C10", good == len(ev), f"{good}/{len(ev)} rows ({trivial} trivial)")


# ---------------------------------------------------------------- C9


def test_c9_disorder_invariance(verdict):
    cases = [
        ("kitaev", kitaev_chain(mu=1.0, L=40), lambda m, d: pfaffian_z2(m, d).value),
        ("kitaev", kitaev_chain(mu=3.0, L=40), lambda m, d: pfaffian_z2(m, d).value),
        ("ssh", ssh(0.5, 1.0, L=40), lambda m, d: winding_1d(m, 64, d).value),
        ("ssh", ssh(2.0, 1.0, L=40), lambda m, d: winding_1d(m, 64, d).value),
        ("qwz", qwz(1.0, L=12), lambda m, d: bott_index(flatten(assemble(m, d)).M, m).value),
        ("qwz", qwz(3.0, L=12), lambda m, d: bott_index(flatten(assemble(m, d)).M, m).value),
    ]
    summary, ok = [], True
    for name, m, inv in cases:
        g0 = bloch_gap(m, 256 if m.d == 1 else 48)
        clean_val = inv(m, None)
        vals = {inv(m, disorder(m, sd, f * g0)) for f in (0.15, 0.3) for sd in range(50)}
        ok &= vals == {clean_val}
        summary.append(f"{name}:{clean_val}")
    verdict("C9", ok, "constant over 50 seeds at 0.15 and 0.3 gap: " + ", ".join(summary))


# ---------------------------------------------------------------- C11


def test_c11_determinism(tmp_path, verdict):
    ini = tmp_path / "sweep.ini"
    ini.write_text('[model]\nname = "kitaev"\nL = 40\n[grid]\nmu = "0:4:9"\n'
                   '[disorder]\nstrength = 0.3\nseeds = "0..4"\n', encoding="utf-8")
    bb = tmp_path / "bb.ini"
    bb.write_text('[model]\nname = "ssh"\nL = 30\n[grid]\nv = "0.5:2.0:4"\n'
                  '[disorder]\nstrength = 0.3\nseeds = "0..2"\n', encoding="utf-8")
    same = []
    for task, cfg in (("disorder-sweep", ini), ("bb-check", bb), ("bulk-invariant", ini)):
        outs = []
        for i, jobs in enumerate(("1", "2")):
            out = tmp_path / f"{task}-{i}"
            assert cli.main([task, "--config", str(cfg), "--out", str(out), "--jobs", jobs]) in (0, 1)
            outs.append((out / "rows.csv").read_bytes())
        same.append(outs[0] == outs[1])
    verdict("C11", all(same), f"{sum(same)}/{len(same)} CSVs byte-identical across reruns")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
