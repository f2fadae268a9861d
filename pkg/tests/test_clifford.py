from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import GRADED_DIMS_NEG, GRADED_DIMS_POS, SX, SY, SZ
from tenfold.clifford import (
    MissingGrading,
    NoReference,
    NotIQPV,
    PositiveGeneratorsPresent,
    SizeExceeded,
    bulk_representative,
    corner_iso,
    direct_sum,
    extend_rep,
    graded_tensor,
    iqpv_check,
    iqpv_setting,
    orhu_inverse,
    orhu_map,
    projection_residuals,
    pseudo_projection,
    random_iqpv,
    real_span_basis,
    standard_rep,
    verify_rep,
    volume_element,
)
from tenfold.core import opnorm

SIGNATURES_4 = [(r, n - r) for n in range(0, 5) for r in range(n + 1)]


def anticomm(a, b):
    return a @ b + b @ a


class TestStandardRep:
    @pytest.mark.parametrize("r,s", [(r, n - r) for n in range(9) for r in range(n + 1)])
    def test_relations(self, r, s):
        rep = standard_rep(r, s)
        assert verify_rep(rep).residual < 1e-10
        n = rep.dim
        # independent relation check, written out here
        for a, x in enumerate(rep.K):
            assert opnorm(x @ x - np.eye(n)) < 1e-12
            for y in rep.K[a + 1:] + rep.J:
                assert opnorm(anticomm(x, y)) < 1e-12
        for a, x in enumerate(rep.J):
            assert opnorm(x @ x + np.eye(n)) < 1e-12
            for y in rep.J[a + 1:]:
                assert opnorm(anticomm(x, y)) < 1e-12
        G = rep.Gamma
        assert opnorm(G @ G - np.eye(n)) < 1e-12
        assert all(opnorm(anticomm(G, g)) < 1e-12 for g in rep.generators)

    def test_cl11_exact(self):
        rep = standard_rep(1, 1)
        assert np.array_equal(rep.K[0], SX)
        assert np.array_equal(rep.J[0], -1j * SY)

    def test_empty(self):
        rep = standard_rep(0, 0)
        assert rep.dim == 1 and rep.K == () and rep.J == ()
        assert verify_rep(rep).passed

    def test_quaternion_table(self):
        rep = standard_rep(0, 2)
        basis = real_span_basis(rep)
        assert len(basis) == 4
        # real dimension 4: the basis is linearly independent over R
        stacked = np.array([np.r_[b.real.ravel(), b.imag.ravel()] for b in basis])
        assert np.linalg.matrix_rank(stacked) == 4
        # every element is real for the structure and lies in span_R{1, iσx, iσy, iσz}
        G = rep.ctx.G
        quats = [np.eye(2), 1j * SX, 1j * SY, 1j * SZ]
        Qm = np.array([np.r_[q.real.ravel(), q.imag.ravel()] for q in quats]).T
        for b in basis:
            assert opnorm(G @ b.conj() @ G.conj().T - b) < 1e-12
            v = np.r_[b.real.ravel(), b.imag.ravel()]
            coef, res, *_ = np.linalg.lstsq(Qm, v, rcond=None)
            assert np.linalg.norm(Qm @ coef - v) < 1e-12
        i, j = rep.J
        k = i @ j
        for u in (i, j, k):
            assert opnorm(u @ u + np.eye(2)) < 1e-12
        assert opnorm(j @ k - i) < 1e-12 and opnorm(k @ i - j) < 1e-12

    def test_dims_frozen(self):
        assert [standard_rep(0, s).dim for s in range(9)] == GRADED_DIMS_NEG
        assert [standard_rep(r, 0).dim for r in range(9)] == GRADED_DIMS_POS
        for n, d in enumerate(GRADED_DIMS_NEG):
            assert d >= 2 ** ((n + 1) // 2) and d & (d - 1) == 0

    def test_size_exceeded(self):
        with pytest.raises(SizeExceeded):
            standard_rep(7, 6)

    def test_perturbed_unitarity(self):
        rep = standard_rep(2, 3)
        bad = replace(rep, J=(1.01 * rep.J[0],) + rep.J[1:])
        report = verify_rep(bad)
        assert not report.passed
        assert report.parts["unitarity"] == pytest.approx(1.01 ** 2 - 1, rel=1e-6)


class TestVolumeElement:
    @pytest.mark.parametrize("s", range(1, 9))
    def test_square_pattern(self, s):
        for graded in (True, False):
            rep = standard_rep(0, s, graded=graded)
            w = volume_element(rep).M
            # ω² = (-1)^{s(s+1)/2}, from reordering s anticommuting square roots of -1
            sign = (-1) ** (s * (s + 1) // 2)
            assert opnorm(w @ w - sign * np.eye(rep.dim)) < 1e-12
            central = max(opnorm(w @ j - j @ w) for j in rep.J)
            if s % 2:
                assert central < 1e-12
            else:
                assert central > 0.5

    def test_s1(self):
        rep = standard_rep(0, 1)
        assert np.array_equal(volume_element(rep).M, rep.J[0])

    def test_positive_rejected(self):
        with pytest.raises(PositiveGeneratorsPresent):
            volume_element(standard_rep(1, 1))


class TestExtension:
    @pytest.mark.parametrize("s", [3, 7])
    def test_graded_extends(self, s):
        ext = extend_rep(standard_rep(0, s))
        assert ext.extendable
        assert ext.multiplicities[0] == ext.multiplicities[1]
        assert verify_rep(ext.rep).residual < 1e-10
        assert ext.rep.s == s + 1

    def test_irreducible_not_extendable(self):
        irr = standard_rep(0, 3, graded=False)
        flipped = replace(irr, J=irr.J[:2] + (-irr.J[2],))
        ext = extend_rep(flipped)
        assert not ext.extendable
        assert ext.multiplicities == (flipped.dim, 0)

    def test_sum_of_opposite_irreducibles(self):
        irr = standard_rep(0, 3, graded=False)
        flipped = replace(irr, J=irr.J[:2] + (-irr.J[2],))
        ext = extend_rep(direct_sum(irr, flipped))
        assert ext.extendable and verify_rep(ext.rep).passed
        Jn = ext.J_new
        m = Jn.shape[0] // 2
        # block form [[0, -u*], [u, 0]] in the ω eigenbasis
        w = volume_element(direct_sum(irr, flipped)).M
        ev, V = np.linalg.eigh((w + w.conj().T) / 2)
        B = V.conj().T @ Jn @ V
        assert opnorm(B[:m, :m]) < 1e-10 and opnorm(B[m:, m:]) < 1e-10


class TestGradedTensor:
    def test_cl11_squared(self):
        rep = graded_tensor(standard_rep(1, 1), standard_rep(1, 1))
        assert (rep.r, rep.s, rep.dim) == (2, 2, 4)
        assert verify_rep(rep).passed

    def test_unit_factor(self):
        B = standard_rep(1, 2)
        assert graded_tensor(standard_rep(0, 0), B) is B

    @pytest.mark.parametrize("a,b", [((1, 0), (0, 1)), ((1, 1), (0, 2)), ((2, 0), (1, 1)), ((0, 1), (0, 1))])
    def test_dims_multiply(self, a, b):
        A, B = standard_rep(*a), standard_rep(*b)
        T = graded_tensor(A, B)
        assert T.dim == A.dim * B.dim
        assert (T.r, T.s) == (a[0] + b[0], a[1] + b[1])
        assert verify_rep(T).passed

    def test_missing_grading(self):
        with pytest.raises(MissingGrading):
            graded_tensor(standard_rep(0, 1, graded=False), standard_rep(1, 1))


class TestPseudoProjection:
    def test_trivial(self):
        rep, _ = iqpv_setting(0, 0)
        pp = pseudo_projection(rep)
        assert np.array_equal(pp.P, np.eye(pp.P.shape[0]))

    def test_half_rank(self):
        rep, _ = iqpv_setting(0, 1)
        pp = pseudo_projection(rep)
        assert np.trace(pp.Pa[0]).real == pytest.approx(pp.P.shape[0] / 2)

    @pytest.mark.parametrize("r,s", SIGNATURES_4)
    def test_projections(self, r, s):
        rep, _ = iqpv_setting(r, s)
        res = projection_residuals(pseudo_projection(rep))
        assert max(res.values()) < 1e-12


class TestORHU:
    def test_trivial_case_hermitian(self):
        rep, Jref = iqpv_setting(0, 0)
        X = orhu_map(Jref, rep)
        assert X.valid()
        assert opnorm(X.X.M - np.kron(Jref, standard_rep(0, 1).J[0])) < 1e-14

    @pytest.mark.parametrize("r,s", SIGNATURES_4)
    def test_random_roundtrip(self, r, s):
        rep, _ = iqpv_setting(r, s)
        rng = np.random.default_rng(100 * r + s)
        for _ in range(3):
            J = random_iqpv(rep, rng)
            assert max(iqpv_check(J, rep).values()) < 1e-10
            X = orhu_map(J, rep)
            assert X.valid(1e-10)
            assert opnorm(orhu_inverse(X, rep) - J) < 1e-12

    def test_not_iqpv(self):
        rep, Jref = iqpv_setting(1, 1)
        with pytest.raises(NotIQPV, match="square"):
            orhu_map(2 * Jref, rep)

    @given(st.integers(0, 2**31))
    @settings(max_examples=15, deadline=None)
    def test_lipschitz_along_path(self, seed):
        rep, _ = iqpv_setting(0, 1)
        rng = np.random.default_rng(seed)
        J0 = random_iqpv(rep, rng)
        J1 = random_iqpv(rep, rng)
        prev_J, prev_X = J0, orhu_map(J0, rep).X.M
        for t in np.linspace(0, 1, 50)[1:]:
            # geodesic-free path: polar retraction of a linear interpolation
            Y = (1 - t) * J0 + t * J1
            U, sv, Vh = np.linalg.svd(Y)
            if sv.min() < 1e-3:
                return
            Jt = U @ Vh
            if max(iqpv_check(Jt, rep).values()) > 1e-10:
                return
            Xt = orhu_map(Jt, rep).X.M
            assert opnorm(Xt - prev_X) <= opnorm(Jt - prev_J) + 1e-12
            prev_J, prev_X = Jt, Xt

    @pytest.mark.parametrize("r,s", SIGNATURES_4)
    def test_bulk_representative(self, r, s):
        rep, Jref = iqpv_setting(r, s)
        rng = np.random.default_rng(7)
        J = random_iqpv(rep, rng)
        B = bulk_representative(J, Jref, rep).M
        pp = pseudo_projection(rep)
        n = B.shape[0]
        assert opnorm(B @ B - np.eye(n)) < 1e-10
        assert opnorm(B - B.conj().T) < 1e-10
        assert opnorm(pp.Gamma @ B + B @ pp.Gamma) < 1e-10
        G = pp.ctx.G
        assert opnorm(G @ B.conj() @ G.conj().T - B) < 1e-10
        same = bulk_representative(Jref, Jref, rep).M
        assert opnorm(same - np.kron(Jref, pp.j1)) < 1e-12


class TestCorner:
    @pytest.mark.parametrize("r,s", [(1, 0), (0, 1), (1, 1), (0, 2), (2, 0), (1, 2), (0, 3)])
    def test_verified(self, r, s):
        rep, Jref = iqpv_setting(r, s)
        iso = corner_iso(rep, None, Jref, n_checks=5)
        rep_ = iso.report
        assert rep_["passed"], rep_
        assert rep_["partition"] < 1e-12
        assert rep_["unit"] < 1e-12
        assert rep_["reference"] < 1e-10

    def test_eps_order(self):
        rep, Jref = iqpv_setting(1, 1)
        iso = corner_iso(rep, None, Jref, n_checks=1)
        assert iso.eps == ((1, 1), (1, -1), (-1, 1), (-1, -1))

    def test_no_reference(self):
        rep, _ = iqpv_setting(1, 0)
        with pytest.raises(NoReference):
            corner_iso(rep, None, None)
