import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcfield.errors import (
    DimensionError,
    ModelInvalidError,
    NotPeriodicError,
    UndecidableError,
)
from pcfield.lattice import LatticeSubgroup
from pcfield.model import (
    Envelope,
    PeriodicField,
    UnitaryRep,
    amplitude_modulated,
    box_window,
    empirical_covariance,
    is_k_pc,
    is_square_integrable,
    make_model,
    psd_factor,
    sample_paths,
    stationary_model,
    time_deformed,
)


def _direct_kernel(model, t, s):
    # sum_j exp(i chi_j (t - s)) (Proj_j P(t), Proj_j P(s))
    pt, ps = model.P(np.array([t]))[0], model.P(np.array([s]))[0]
    out = 0j
    for chi, P in zip(model.U.freqs, model.U.projections):
        out += np.exp(1j * chi @ (np.asarray(t) - np.asarray(s))) * np.vdot(P @ ps, P @ pt)
    return out


def test_trivial_rep_constant_field():
    U = UnitaryRep.trivial(2, 3)
    q = LatticeSubgroup.full(2).quotient
    p = np.array([1.0, 2j, -0.5])
    X = make_model(U, PeriodicField.constant(q, p))
    w = box_window((-2, 2), (-2, 2))
    assert np.allclose(X.kernel_matrix(w), np.vdot(p, p).real)


def test_two_atom_2pc_kernel_matches_direct_formula():
    U = UnitaryRep.diagonal([[0.0], [np.pi]])
    K = LatticeSubgroup.from_generators([[2]])
    P = PeriodicField(K.quotient, 2, {(0,): [1.0, 0.5j], (1,): [0.3, 2.0]})
    X = make_model(U, P)
    w = box_window((-8, 8))
    G = X.kernel_matrix(w)
    for i, t in enumerate(w):
        for j, s in enumerate(w):
            assert abs(G[i, j] - _direct_kernel(X, t, s)) < 1e-12
    assert is_k_pc(X, K, w)


def test_weak_model_square_integrable_geometric():
    K = LatticeSubgroup.from_generators([[12, 9]])
    rho = 0.5
    P = PeriodicField(K.quotient, 1, lambda x: [rho ** abs(x[1])], Envelope(1.0, rho))
    X = make_model(UnitaryRep.trivial(2), P)
    res = is_square_integrable(X)
    # 3 * sum_l rho^{2|l|}
    want = 3 * (1 + rho**2) / (1 - rho**2)
    assert res.finite
    assert abs(res.value - want) <= res.tail_bound + 1e-12
    assert res.tail_bound < 1e-30


def test_square_integrable_finite_and_divergent(strong):
    K = LatticeSubgroup.from_generators([[2, 0], [0, 3]])
    X = make_model(UnitaryRep.trivial(2), PeriodicField.constant(K.quotient, [1.0]))
    res = is_square_integrable(X)
    assert res.finite and res.value == 6 and res.tail_bound == 0
    Kw = LatticeSubgroup.from_generators([[12, 9]])
    flat = make_model(UnitaryRep.trivial(2), PeriodicField(Kw.quotient, 1, lambda x: [1.0], Envelope(1.0, 1.0)))
    assert not is_square_integrable(flat).finite
    bare = make_model(UnitaryRep.trivial(2), PeriodicField(Kw.quotient, 1, lambda x: [1.0]))
    with pytest.raises(UndecidableError):
        is_square_integrable(bare)


def test_square_integrable_value_is_sum_of_B0(weak):
    res = is_square_integrable(weak, truncation=40)
    coords = weak.quotient.box(40)
    B0 = weak.B_many([0, 0], coords)
    assert np.all(np.abs(B0.imag) < 1e-14) and np.all(B0.real >= 0)
    assert abs(res.value - B0.real.sum()) < 1e-12


def test_amplitude_identity_modulation(stationary):
    K = LatticeSubgroup.from_generators([[2, 0], [0, 1]])
    X = amplitude_modulated(lambda t: 1.0, stationary, K)
    w = box_window((-3, 3), (-3, 3))
    assert np.allclose(X.kernel_matrix(w), stationary.kernel_matrix(w), atol=1e-12)


def test_amplitude_2pc_B(ampl2):
    R0 = 1.0
    assert abs(ampl2.B([0], [0]) - 1 * R0) < 1e-12
    assert abs(ampl2.B([0], [1]) - 4 * R0) < 1e-12
    w = box_window((-6, 6))
    f = np.where(w[:, 0] % 2 == 0, 1.0, 2.0)
    Y = stationary_model([[0.4], [2.1]], [0.6, 0.4])
    assert np.allclose(ampl2.kernel_matrix(w), np.outer(f, f) * Y.kernel_matrix(w), atol=1e-12)


def test_amplitude_one_generator_z2_is_weakly_pc(stationary):
    K = LatticeSubgroup.from_generators([[3, 2]])

    def f(t):
        # depends on t only modulo (3, 2): 2 t1 - 3 t2 is invariant, take a periodic function of it
        return 1.0 + 0.5 * np.cos(0.4 * (2 * t[0] - 3 * t[1]))

    X = amplitude_modulated(f, stationary, K, envelope=None)
    assert not X.quotient.is_finite
    assert is_k_pc(X, K, box_window((-3, 3), (-3, 3)))


def test_amplitude_rejects_nonperiodic(stationary):
    K = LatticeSubgroup.from_generators([[2, 0], [0, 3]])
    with pytest.raises(NotPeriodicError):
        amplitude_modulated(lambda t: float(t[0]), stationary, K)


def test_time_deformation_identity(stationary):
    K = LatticeSubgroup.from_generators([[2, 0], [0, 2]])
    X = time_deformed(lambda t: (0, 0), stationary, K)
    w = box_window((-3, 3), (-3, 3))
    assert np.allclose(X.kernel_matrix(w), stationary.kernel_matrix(w), atol=1e-12)


def test_time_deformation_2pc():
    Y = stationary_model([[0.4], [2.1]], [0.6, 0.4])
    K = LatticeSubgroup.from_generators([[2]])
    X = time_deformed(lambda t: (t[0] % 2,), Y, K)
    # K_X(0, 1) = R_Y(0 + 0 - 1 - 1)
    R = lambda t: 0.6 * np.exp(0.4j * t) + 0.4 * np.exp(2.1j * t)
    assert abs(X.kernel([0], [1]) - R(-2)) < 1e-12
    w = box_window((-5, 5))
    sh = w[:, 0] + w[:, 0] % 2
    assert np.allclose(X.kernel_matrix(w), R(sh[:, None] - sh[None, :]), atol=1e-12)
    assert is_k_pc(X, K, w)


def test_time_deformation_z2_one_generator(stationary):
    K = LatticeSubgroup.from_generators([[4, 2]])

    def f(t):
        # 2 t1 - 4 t2 is invariant under (4, 2); reduce modulo 3
        return ((t[0] - 2 * t[1]) % 3, 0)

    X = time_deformed(f, stationary, K)
    assert is_k_pc(X, K, box_window((-4, 4), (-4, 4)))


def test_time_deformation_rejects_non_integer(stationary):
    K = LatticeSubgroup.from_generators([[2, 0], [0, 2]])
    with pytest.raises(ModelInvalidError):
        time_deformed(lambda t: (0.5, 0), stationary, K)


def test_b_and_B(strong, rng):
    q = strong.quotient
    for _ in range(30):
        t, s, u = rng.integers(-6, 7, size=(3, 2))
        lhs = strong.kernel(t + q.section(q.to_quotient(u)), s + q.section(q.to_quotient(u)))
        assert abs(strong.b(t, s, q.to_quotient(u)) - lhs) < 1e-12
        assert abs(strong.b(t, s, q.to_quotient(u)) - strong.B(t - s, q.to_quotient(s + u))) < 1e-10
    for x in q.enumerate():
        B0 = strong.B([0, 0], x)
        assert abs(B0.imag) < 1e-12 and B0.real >= 0


def test_stationary_B_independent_of_x(stationary):
    x0 = stationary.B([2, -1], ())
    R = np.sum(np.array([1.0, 0.5, 0.8]) * np.exp(1j * stationary.U.freqs @ np.array([2, -1])))
    assert abs(x0 - R) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=2, max_size=2),
       st.lists(st.integers(-20, 20), min_size=2, max_size=2),
       st.integers(0, 2**31))
def test_unitary_group_law(t, s, seed):
    from pcfield import presets
    U = presets.strong().U
    v = np.random.default_rng(seed).standard_normal(4) + 0j
    Ut, Us, Uts = U.operator(t), U.operator(s), U.operator(np.add(t, s))
    assert np.max(np.abs(Uts - Ut @ Us)) < 1e-10
    assert abs(np.linalg.norm(Ut @ v) - np.linalg.norm(v)) < 1e-10 * np.linalg.norm(v)


def test_kpc_hermitian_psd(weak, strong, rng):
    for model, w in [(strong, box_window((-4, 4), (-4, 4))), (weak, box_window((-4, 4), (-4, 4)))]:
        G = model.kernel_matrix(w)
        assert np.max(np.abs(G - G.conj().T)) < 1e-12
        assert np.linalg.eigvalsh(G)[0] >= -1e-9 * model.scale(w)
        assert is_k_pc(model, model.subgroup, w)


def test_construction_errors():
    with pytest.raises(ModelInvalidError):
        UnitaryRep(np.array([[0.0], [1.0]]), (np.array([[1.0], [0.0]]), np.array([[1.0], [0.1]])))
    with pytest.raises(ModelInvalidError):
        UnitaryRep(np.array([[0.0], [0.0]]), (np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])))
    K = LatticeSubgroup.from_generators([[2]])
    with pytest.raises(DimensionError):
        make_model(UnitaryRep.trivial(1, 2), PeriodicField.constant(K.quotient, [1.0]))
    with pytest.raises(DimensionError):
        PeriodicField(K.quotient, 2, {(0,): [1.0]})


def test_sampling_covariance(strong):
    w = box_window((0, 2), (0, 1))
    count = 20000
    real = sample_paths(strong, w, count, seed=7)
    emp = empirical_covariance(real)
    true = strong.kernel_matrix(w)
    assert np.max(np.abs(emp - true)) <= 5 / np.sqrt(count) * strong.scale(w)


def test_sampling_zero_field_and_determinism(ampl2):
    K = LatticeSubgroup.from_generators([[2]])
    Z = make_model(UnitaryRep.trivial(1), PeriodicField.constant(K.quotient, [0.0]))
    assert not np.any(sample_paths(Z, box_window((0, 5)), 10, 3).paths)
    a = sample_paths(ampl2, box_window((0, 5)), 50, 11).paths
    b = sample_paths(ampl2, box_window((0, 5)), 50, 11).paths
    assert np.array_equal(a, b)


def test_psd_factor_rejects_indefinite():
    with pytest.raises(ModelInvalidError):
        psd_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))
    L = psd_factor(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert np.allclose(L @ L.conj().T, 1.0)
