from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcfield.errors import ContractError, InvalidSubgroupError
from pcfield.lattice import (
    LatticeSubgroup,
    annihilator,
    bezout_phi,
    character,
    ext_gcd,
    hermite_normal_form,
    parse_generators,
    smith_normal_form,
    weil_check,
)

small = st.integers(-30, 30)


def _det(M):
    return round(np.linalg.det(np.asarray(M, dtype=float)))


def _check_snf(A):
    U, S, V = smith_normal_form(A)
    A = np.asarray(A, dtype=np.int64)
    assert np.array_equal(U @ A @ V, S)
    assert abs(_det(U)) == 1 and abs(_det(V)) == 1
    assert not np.count_nonzero(S - np.diag(np.diag(S)) if S.shape[0] == S.shape[1] else
                                S * (1 - np.eye(*S.shape, dtype=np.int64)))
    d = [int(S[i, i]) for i in range(min(S.shape))]
    nz = [v for v in d if v]
    assert all(v > 0 for v in nz)
    assert d[:len(nz)] == nz
    for a, b in zip(nz, nz[1:]):
        assert b % a == 0
    return U, S, V


def test_snf_diag_2_3():
    _, S, _ = _check_snf([[2, 0], [0, 3]])
    assert np.array_equal(S, np.diag([1, 6]))


def test_snf_identity():
    _, S, _ = _check_snf(np.eye(2, dtype=int))
    assert np.array_equal(S, np.eye(2))


def test_snf_row_12_9():
    _, S, V = _check_snf([[12, 9]])
    assert S.tolist() == [[3, 0]]


def test_snf_overflow_is_an_error():
    with pytest.raises(OverflowError):
        smith_normal_form([[2**70, 3]])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.data())
def test_snf_property(r, c, data):
    A = [[data.draw(small) for _ in range(c)] for _ in range(r)]
    _check_snf(A)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.data())
def test_hnf_generates_same_lattice(n, data):
    rows = [[data.draw(small) for _ in range(n)] for _ in range(n)]
    rows = [r for r in rows if any(r)] or [[1] * n]
    K = LatticeSubgroup.from_generators(rows)
    H = hermite_normal_form(rows)
    for g in K.matrix:
        assert K.contains(g)
    K2 = LatticeSubgroup.from_generators(H)
    for g in K.matrix:
        assert K2.contains(g)
    for h in H:
        assert K.contains(h)


def test_quotient_examples():
    q = LatticeSubgroup.from_generators([[2, 0], [0, 3]]).quotient
    assert q.torsion == (6,) and q.free_rank == 0 and q.size == 6
    assert q.diagonal_residues() == (2, 3)
    q = LatticeSubgroup.from_generators([[12, 9]]).quotient
    assert q.torsion == (3,) and q.free_rank == 1
    q = LatticeSubgroup.full(3).quotient
    assert q.torsion == () and q.free_rank == 0 and q.size == 1


def test_quotient_counts_cosets_by_enumeration():
    # brute force: residues of a box that is a multiple of both periods
    K = LatticeSubgroup.from_generators([[2, 0], [0, 3]])
    pts = np.array([(a, b) for a in range(12) for b in range(12)])
    cos = {tuple(K.reduce(p)) for p in pts}
    assert len(cos) == K.quotient.size


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_section_is_right_inverse(data):
    n = data.draw(st.integers(1, 3))
    r = data.draw(st.integers(1, n))
    rows = [[data.draw(st.integers(-9, 9)) for _ in range(n)] for _ in range(r)]
    rows = [row for row in rows if any(row)] or [[3] + [0] * (n - 1)]
    K = LatticeSubgroup.from_generators(rows)
    q = K.quotient
    t = np.array([data.draw(st.integers(-40, 40)) for _ in range(n)])
    x = q.to_quotient(t)
    s = q.section(x)
    assert K.contains(s - t)
    assert np.array_equal(q.to_quotient(s), x)
    assert not np.any(q.section(np.zeros(q.ncoords, dtype=np.int64)))


def test_annihilator_finite():
    ann = annihilator(LatticeSubgroup.from_generators([[2, 0], [0, 3]]))
    got = sorted(tuple(np.round(f.theta, 12)) for f in ann.frequencies)
    want = sorted((round(u, 12), round(v, 12)) for u in (0, np.pi) for v in (0, 2 * np.pi / 3, 4 * np.pi / 3))
    assert len(got) == 6
    assert np.allclose(got, want)


def test_annihilator_lines_12_9():
    K = LatticeSubgroup.from_generators([[12, 9]])
    ann = annihilator(K)
    assert len(ann.families) == 3
    for k, fam in enumerate(ann.families):
        for t in np.linspace(0, 2 * np.pi, 17):
            want = np.mod([2 * np.pi * k / 3 - 3 * t, -2 * np.pi * k / 3 + 4 * t], 2 * np.pi)
            got = fam.point([t])
            assert np.max(np.abs(np.exp(1j * got) - np.exp(1j * want))) < 1e-9
            assert K.quotient.in_annihilator(got)


def test_annihilator_full_group():
    ann = annihilator(LatticeSubgroup.full(3))
    assert len(ann.frequencies) == 1 and np.allclose(ann.frequencies[0].theta, 0)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_annihilator_membership(data):
    n = data.draw(st.integers(1, 3))
    rows = [[data.draw(st.integers(-8, 8)) for _ in range(n)] for _ in range(data.draw(st.integers(1, n)))]
    rows = [row for row in rows if any(row)] or [[2] + [0] * (n - 1)]
    K = LatticeSubgroup.from_generators(rows)
    ann = annihilator(K)
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    for _ in range(5):
        lam = ann.sample(rng)
        for k in K.matrix:
            assert abs(character(lam, k) - 1) <= 1e-9


def test_character_examples():
    z = character([np.pi, 2 * np.pi / 3], [1, 1])
    assert abs(z - (0.5 + 1j * np.sqrt(3) / 2)) < 1e-12
    assert character([1.3, 0.2], [0, 0]) == 1
    for f in annihilator(LatticeSubgroup.from_generators([[2, 0], [0, 3]])).frequencies:
        assert abs(character(f, [2, 3]) - 1) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), st.lists(st.integers(-50, 50), min_size=3, max_size=3))
def test_character_unit_modulus(theta, t):
    assert abs(abs(character(theta, t)) - 1) < 1e-12


def test_bezout_examples():
    b = bezout_phi(12, 9)
    assert (b.d, b.T1, b.S1, b.p, b.q) == (3, 4, 3, 1, 1)
    b = bezout_phi(1, 0)
    assert (b.d, b.T1, b.S1, b.p, b.q) == (1, 1, 0, 0, 1)
    b = bezout_phi(5, 3)
    assert (b.d, b.p, b.q) == (1, 3, 2) and 5 * 2 - 3 * 3 == 1
    with pytest.raises(InvalidSubgroupError):
        bezout_phi(0, 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(-60, 60), st.integers(-60, 60))
def test_bezout_property(T, S):
    if T == 0 and S == 0:
        return
    if T <= 0 and S <= 0:
        with pytest.raises(InvalidSubgroupError):
            bezout_phi(T, S)
        return
    b = bezout_phi(T, S)
    phi = np.asarray(b.phi)
    assert _det(phi) == 1
    assert b.T1 * b.q - b.S1 * b.p == 1
    assert (phi @ np.array([b.d, 0])).tolist() == [T, S]
    if b.T1:
        assert 0 <= b.p < abs(b.T1)


def test_ext_gcd():
    for a in range(-12, 13):
        for b in range(-12, 13):
            if a == 0 and b == 0:
                with pytest.raises(InvalidSubgroupError):
                    ext_gcd(a, b)
                continue
            g, x, y = ext_gcd(a, b)
            assert a * x + b * y == g and g >= 0


def test_weil_examples():
    K = LatticeSubgroup.from_generators([[2, 0], [0, 3]])
    assert weil_check({(0, 0): 1}, K) == (1, 1)
    box = {(a, b): 1 for a in range(6) for b in range(6)}
    assert weil_check(box, K) == (36, 36)


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.tuples(st.integers(-9, 9), st.integers(-9, 9)),
                       st.fractions(min_value=-5, max_value=5, max_denominator=7), max_size=25),
       st.sampled_from([[[2, 0], [0, 3]], [[12, 9]], [[1, 1]], [[3, 1], [1, 3]]]))
def test_weil_property(f, gens):
    lhs, rhs = weil_check(f, LatticeSubgroup.from_generators(gens))
    assert lhs == rhs and isinstance(lhs, (int, Fraction))


def test_parse_generators():
    assert parse_generators("12,9").tolist() == [[12, 9]]
    assert parse_generators("2,0;0,3").tolist() == [[2, 0], [0, 3]]
    assert parse_generators("[[2,0],[0,3]]").tolist() == [[2, 0], [0, 3]]
    for bad in ["", "1,2;3", "a,b", "[1.5, 2]"]:
        with pytest.raises(ContractError):
            parse_generators(bad)


def test_zero_rows_rejected():
    with pytest.raises(InvalidSubgroupError):
        LatticeSubgroup.from_generators([[0, 0]])


def test_lift_character_fundamental_domain():
    K = LatticeSubgroup.from_generators([[2]])
    q = K.quotient
    for th in np.linspace(0, 2 * np.pi, 9, endpoint=False):
        chi = q.lift_character([th])
        assert 0 <= chi[0] < np.pi + 1e-12
        assert abs(np.exp(2j * chi[0]) - np.exp(1j * th)) < 1e-12
