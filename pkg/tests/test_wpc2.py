import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcfield.errors import ContractError
from pcfield.lattice import TWO_PI, angle_distance
from pcfield.model import PeriodicField, UnitaryRep, make_model
from pcfield.spectra import spectral_covariance
from pcfield.wpc2 import (
    WpcParams,
    a_kt,
    example_model,
    figure_data,
    lambda_lines,
    rotate_to_stationary,
)


def _in_annihilator(T, S, uv, tol=1e-9):
    return angle_distance(T * uv[..., 0] + S * uv[..., 1], 0.0) <= tol


def test_lines_for_12_9():
    p = WpcParams.of(12, 9)
    assert p.d == 3
    b = p.bezout
    assert (b.T1, b.S1) == (4, 3)
    assert b.T1 * b.q - b.S1 * b.p == 1
    assert 0 <= b.p < abs(b.T1)
    assert round(np.linalg.det(p.phi)) == 1
    lines = lambda_lines(p)
    assert len(lines) == 3
    t = np.linspace(0, TWO_PI, 50)
    for line in lines:
        assert np.all(_in_annihilator(12, 9, line(t)))


def test_lines_are_distinct():
    p = WpcParams.of(12, 9)
    pts = [p.line_point(k, 0.0) for k in range(3)]
    for i in range(3):
        for j in range(i + 1, 3):
            assert np.max(angle_distance(pts[i], pts[j])) > 0.1


@pytest.mark.parametrize("T,S,d", [(1, 0, 1), (0, 1, 1), (2, 2, 2), (-6, 4, 2), (5, 3, 1)])
def test_small_period_vectors(T, S, d):
    p = WpcParams.of(T, S)
    assert p.d == d
    assert abs(round(np.linalg.det(p.phi))) == 1
    # phi(1, 0) is the primitive period
    assert np.array_equal(p.phi_map(1, 0) * d, [T, S])


@settings(max_examples=200, deadline=None)
@given(st.integers(-50, 50), st.integers(-50, 50), st.floats(0, 2 * np.pi))
def test_line_membership_property(T, S, t):
    if T <= 0 and S <= 0:
        return
    p = WpcParams.of(T, S)
    for k in range(p.d):
        assert _in_annihilator(T, S, p.line_point(k, t), tol=1e-8)


def test_psi_inverts_lines():
    p = WpcParams.of(12, 9)
    for k in range(3):
        uv = p.psi(TWO_PI * k / 3, 1.3)
        assert np.max(angle_distance(uv, p.line_point(k, 1.3))) < 1e-9


def test_a_kt_zero_field():
    p = WpcParams.of(12, 9)
    q = p.subgroup.quotient
    P = PeriodicField(q, 1, {(0, 0): np.zeros(1)})
    m = make_model(UnitaryRep.diagonal([[0.2, 0.1]]), P)
    v, tail = a_kt(m, p, 0, 0.4, 1, 2, truncation=5)
    assert v == 0 and tail == 0


def test_a_kt_matches_spectral_covariance(weak):
    p = WpcParams.of(12, 9)
    for k in range(3):
        lam = p.line_point(k, 0.7)
        v, _ = a_kt(weak, p, k, 0.7, 2, -1, truncation=30)
        ref = spectral_covariance(weak, lam, [2, -1], truncation=30)
        assert abs(v - ref.value) <= 1e-12


def test_a_kt_truncation_doubling(weak):
    p = WpcParams.of(12, 9)
    v1, tail1 = a_kt(weak, p, 1, 2.0, 3, 1, truncation=12)
    v2, tail2 = a_kt(weak, p, 1, 2.0, 3, 1, truncation=24)
    assert tail2 < tail1
    assert abs(v1 - v2) <= tail1 + tail2


def test_a_kt_rejects_other_period(weak):
    with pytest.raises(ContractError):
        a_kt(weak, WpcParams.of(4, 3), 0, 0.0, 0, 0)


@pytest.mark.parametrize("T,S", [(1, 1), (5, 3)])
def test_rotation_is_stationary_in_first_coordinate(T, S):
    p = WpcParams.of(T, S)
    X = example_model(T, S)
    Y = rotate_to_stationary(X, p)
    assert Y.subgroup.same_as(type(Y.subgroup).from_generators([[1, 0]]))
    pts = np.array([[a, b] for a in range(-3, 4) for b in range(-2, 3)])
    # Y(m, n) = X((m, n) Phi^T)
    assert np.allclose(Y.X(pts), X.X(pts @ p.phi.T))
    t, s = pts[:5], pts[5:10]
    K1 = Y.kernel(t, s)
    K2 = Y.kernel(t + [3, 0], s + [3, 0])
    assert np.allclose(K1, K2, atol=1e-12)


def test_rotation_needs_d_one(weak):
    with pytest.raises(ContractError):
        rotate_to_stationary(weak, WpcParams.of(12, 9))


def test_figure_data():
    p = WpcParams.of(12, 9)
    rows, segments = figure_data(p, 360)
    assert len(rows) == 3 * 360
    assert rows[0] == (0, 0.0, 0.0, 0.0)
    uv = np.array([r[2:] for r in rows])
    assert np.all(_in_annihilator(12, 9, uv))
    assert {s["k"] for s in segments} == {0, 1, 2}
    for s in segments:
        pts = np.array(s["points"])
        if len(pts) > 1:
            assert np.max(np.abs(np.diff(pts, axis=0))) <= np.pi


def test_figure_min_samples():
    rows, _ = figure_data(WpcParams.of(1, 0), 2)
    assert len(rows) == 2
    with pytest.raises(ContractError):
        figure_data(WpcParams.of(1, 0), 1)


def test_spectrum_atoms_on_lines(weak):
    from pcfield.spectra import gamma
    p = WpcParams.of(12, 9)
    lam = p.line_point(1, 0.0)
    g = gamma(weak, [0.0, 0.0], lam, truncation=8)
    locs = g.support(rel_tol=1e-12)
    # Gamma^{0,lam} is carried by the lines through its atoms: chi_j + nu with nu in the annihilator
    for loc in locs:
        assert any(_in_annihilator(12, 9, loc - c) for c in weak.U.freqs)
