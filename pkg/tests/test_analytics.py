import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from willis_lattice.analytics import (
    coupling_tensors,
    density_tensor,
    effective_law,
    hidden_displacement,
    inertial_stress,
    momentum_density,
    primed_tensors,
    rod_force_resolution,
    symmetric_variant_params,
)
from willis_lattice.core import (
    CellParams,
    DegenerateGeometryError,
    GradientState,
    ParameterError,
    block_matrix,
    grad_to_vec4,
)
from willis_lattice.homogenize import spring_network_elasticity
from willis_lattice.lattice import build_finite_sample, LatticeSpec
from willis_lattice.solver import solve_prescribed

finite = st.floats(-10, 10, allow_nan=False)
cplx = st.builds(complex, finite, finite)
c_open = st.floats(1e-3, 1 - 1e-3)


def constraint_oracle(w, c):
    """Solve (w - s).(c, 1) = 0 and (w + s).(-c, 1) = 0 for s directly."""
    A = np.array([[c, 1.0], [-c, 1.0]])
    b = np.array([c * w[0] + w[1], c * w[0] - w[1]])
    return np.linalg.solve(A, b)


def single(**kw):
    base = dict(h=0.01, K=1.0, m=1.0, c=0.5, delta=0.0)
    base.update(kw)
    return CellParams(**base)


def paired(**kw):
    base = dict(h=0.01, K=1.0, m=1.0, c=0.5, delta=0.0, m_prime=0.25, c_prime=2.0)
    base.update(kw)
    return CellParams(**base)


# hidden kinematics

def test_hidden_displacement_example():
    np.testing.assert_allclose(hidden_displacement([3, 4], 0.5), [8, 1.5])


def test_hidden_displacement_zero():
    np.testing.assert_array_equal(hidden_displacement([0, 0], 0.3), [0, 0])


def test_hidden_displacement_complex_oracle():
    w = np.array([1 + 2j, -1])
    np.testing.assert_allclose(hidden_displacement(w, 0.8), constraint_oracle(w, 0.8), rtol=1e-13)


def test_hidden_displacement_degenerate():
    with pytest.raises(DegenerateGeometryError):
        hidden_displacement([1, 1], 0.0)


@given(cplx, cplx, c_open)
def test_constraint_residuals(w1, w2, c):
    w = np.array([w1, w2])
    s = hidden_displacement(w, c)
    scale = np.abs(w).sum() + np.abs(s).sum()
    assert abs((w - s) @ [c, 1]) <= 1e-12 * scale
    assert abs((w + s) @ [-c, 1]) <= 1e-12 * scale


@given(cplx, cplx, c_open)
def test_sign_antisymmetry_in_c(w1, w2, c):
    w = np.array([w1, w2])
    np.testing.assert_allclose(constraint_oracle(w, -c), -hidden_displacement(w, c), atol=1e-9)
    np.testing.assert_allclose(hidden_displacement(w, -c), -hidden_displacement(w, c))


# momentum

def test_momentum_density_example():
    state = GradientState(u0=[1, 0], w=[0, 1])
    p = momentum_density(single(), state, 2.0)
    np.testing.assert_allclose(p, [-4j, 0])


def test_momentum_density_zero_state():
    assert np.all(momentum_density(single(delta=1.0), GradientState(), 3.0) == 0)


def test_momentum_density_second_pair_density():
    p = momentum_density(paired(delta=2.0), GradientState(u0=[1, 0]), 1.0)
    np.testing.assert_allclose(p, [-2j, 0])


def test_momentum_density_finite_h_oracle():
    """Mass-weighted hidden-node velocity of one driven cell converges to the
    closed form at first order in h."""
    omega = 1.5
    state = GradientState(u0=[0.3, -0.2j], q=[0.7, 0.1], w=[0.4 + 0.2j, -0.9])
    base = dict(K=1.0, m=1.0, c=0.6, delta=0.3 + 0.1j)
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        p = CellParams(h=h, **base)
        lat = build_finite_sample(LatticeSpec(p, 1, 1))
        v = lat.vertex_ids
        sol = solve_prescribed(lat, omega, (v, state.displacement(lat.positions[v] - lat.cell_centers[0])))
        hid = lat.hidden_ids
        mom = -1j * omega * (lat.masses[hid, None] * sol.displacements[hid]).sum(axis=0) / (2 * h**2)
        exact = momentum_density(p, state, omega)
        errs.append(np.linalg.norm(mom - exact) / np.linalg.norm(exact))
    rate = np.polyfit(np.log([1e-2, 5e-3, 2.5e-3]), np.log(errs), 1)[0]
    assert errs[-1] < 5 * 2.5e-3
    assert rate > 0.9


# rod forces

def test_rod_force_example():
    r = rod_force_resolution([1, 0], 0.5)
    assert r.alpha == pytest.approx(-1) and r.beta == pytest.approx(-1)
    np.testing.assert_allclose(r.F_ED, [-0.5, -1])
    np.testing.assert_allclose(r.F_EB, [-0.5, 1])
    np.testing.assert_allclose(r.t, [0, 2])


def test_rod_force_zero():
    r = rod_force_resolution([0, 0], 0.7)
    for f in (r.F_ED, r.F_EB, r.F_FD, r.F_FB, r.t):
        assert np.all(f == 0)


@given(cplx, cplx, c_open)
def test_rod_force_balance(f1, f2, c):
    F = np.array([f1, f2])
    r = rod_force_resolution(F, c)
    scale = np.abs(F).sum() / c + 1e-300
    assert np.abs(r.F_ED + r.F_EB + F).max() <= 1e-12 * scale
    assert np.abs(r.F_FD + r.F_FB - F).max() <= 1e-12 * scale
    np.testing.assert_allclose(-r.F_ED - r.F_FD, [c * f2, f1 / c], atol=1e-12 * scale)
    # forces lie along the rods
    assert abs(r.F_ED[0] - c * r.F_ED[1]) <= 1e-12 * scale
    assert abs(r.F_EB[0] + c * r.F_EB[1]) <= 1e-12 * scale


def test_rod_force_degenerate():
    with pytest.raises(DegenerateGeometryError):
        rod_force_resolution([1, 0], 0)


# inertial stress

def test_inertial_stress_example():
    s = inertial_stress(single(), [1, 1], 2.0)
    assert s[0, 1] == pytest.approx(-2)
    assert s[1, 1] == pytest.approx(-8)
    assert np.all(s[:, 0] == 0)


def test_inertial_stress_zero():
    assert np.all(inertial_stress(single(), [0, 0], 2.0) == 0)


def test_inertial_stress_symmetric_variant():
    c2 = 2.0
    p = paired(m_prime=symmetric_variant_params(1.0, 0.5, c2), c_prime=c2)
    u = np.array([0.3, 0.7])
    s = inertial_stress(p, u, 2.0)
    assert abs(s[0, 1]) < 1e-15
    assert s[1, 1] == pytest.approx(-4 * (1 / 0.5 - p.m_prime / c2) * u[0])


# coupling tensors

def test_coupling_pattern():
    S, D = coupling_tensors(single(), 2.0)
    expected = np.zeros((4, 2), complex)
    expected[2, 1] = -1j
    expected[3, 0] = -4j
    np.testing.assert_allclose(S, expected, atol=1e-14)
    np.testing.assert_array_equal(D, S.T)


def test_coupling_cancels_with_matched_pair():
    S, D = coupling_tensors(paired(m_prime=0.5, c_prime=1.0), 1.3)
    assert S[2, 1] == 0 and D[1, 2] == 0


def test_coupling_second_pair_example():
    S, _ = coupling_tensors(paired(), 1.0)
    assert S[3, 0] == pytest.approx(-1.875j)


def test_density_tensor():
    assert np.all(density_tensor(single(delta=0.0)) == 0)
    np.testing.assert_allclose(density_tensor(single(delta=2 + 0.5j)), (1 + 0.25j) * np.eye(2))
    np.testing.assert_allclose(density_tensor(paired(delta=2.0)), 2 * np.eye(2))


def test_primed_tensors_example():
    S, D = coupling_tensors(paired(), 1.0)
    S3, D3 = primed_tensors(S, D, 1.0).cartesian()
    assert S3[1, 1, 0] == pytest.approx(-1.875)
    assert D3[0, 1, 1] == pytest.approx(-1.875)
    assert np.isrealobj(S3)


def test_primed_tensors_zero_frequency():
    S, D = coupling_tensors(paired(), 0.0)
    P = primed_tensors(S, D, 0.0)
    assert np.all(P.S_prime == 0) and np.all(P.D_prime == 0)


@given(st.floats(0.05, 0.95), st.floats(0.1, 5.0), st.floats(0.1, 3.0), st.floats(0.1, 3.0))
def test_primed_identities_symmetric_variant(c, c2, m, omega):
    p = paired(m=m, c=c, c_prime=c2, m_prime=symmetric_variant_params(m, c, c2))
    S, D = coupling_tensors(p, omega)
    S3, D3 = primed_tensors(S, D, omega).cartesian()
    scale = omega**2 * (m / c + p.m_prime / c2)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                assert abs(S3[i, j, k] - S3[j, i, k]) <= 1e-12 * scale
                assert abs(S3[i, j, k] - D3[k, i, j]) <= 1e-12 * scale
    nz = np.argwhere(np.abs(S3) > 1e-12 * scale)
    assert [tuple(x) for x in nz] in ([], [(1, 1, 0)])
    assert S3[1, 1, 0] == pytest.approx(omega**2 * (p.m_prime / c2 - m / c), rel=1e-12)


def test_symmetric_variant_params():
    assert symmetric_variant_params(1, 0.5, 2) == pytest.approx(0.25)
    assert symmetric_variant_params(1, 0.5, 0.5) == pytest.approx(1.0)
    S, _ = coupling_tensors(paired(m_prime=1.0, c_prime=0.5), 2.0)
    assert np.all(S == 0)
    with pytest.raises(ParameterError):
        symmetric_variant_params(1, 0.5, 0.0)


@given(st.floats(0.05, 0.95), st.floats(0.1, 5.0), st.floats(0.1, 3.0))
def test_symmetric_variant_zeroes_rotation_coupling(c, c2, m):
    p = paired(m=m, c=c, c_prime=c2, m_prime=symmetric_variant_params(m, c, c2))
    S, _ = coupling_tensors(p, 1.0)
    assert S[2, 1] == 0 or abs(S[2, 1]) < 1e-12 * m * c


def test_rotation_dependence():
    r = 0.7
    rot = grad_to_vec4([[0, -r], [r, 0]])
    _, D1 = coupling_tensors(single(), 1.0)
    p2 = paired(m_prime=symmetric_variant_params(1.0, 0.5, 2.0))
    _, D2 = coupling_tensors(p2, 1.0)
    assert np.linalg.norm(D1 @ rot) > 0.1
    assert np.linalg.norm(D2 @ rot) < 1e-12
    # momentum minus rho*v for the pure rotation state
    state = GradientState(q=[0, r], w=[-r, 0])
    assert np.linalg.norm(momentum_density(p2, state, 1.0)) < 1e-12
    assert np.linalg.norm(momentum_density(single(), state, 1.0)) > 0.1


def test_stress_symmetry_of_velocity_coupling(rng):
    S1, _ = coupling_tensors(single(), 1.0)
    S2, _ = coupling_tensors(paired(m_prime=symmetric_variant_params(1.0, 0.5, 2.0)), 1.0)
    for _ in range(20):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        sig2 = (S2 @ v).reshape(2, 2, order="F")
        assert np.abs(sig2 - sig2.T).max() < 1e-12
    sig1 = (S1 @ np.array([1.0, 1.0])).reshape(2, 2, order="F")
    assert abs(sig1[0, 1] - sig1[1, 0]) > 0.1


# assembled law

def test_effective_law_pattern_zero_network():
    law = effective_law(single(), 1.0, np.zeros((4, 4)))
    B = block_matrix(law)
    S, _ = coupling_tensors(single(), 1.0)
    expected = np.zeros((6, 6), complex)
    expected[:4, 4:] = S
    expected[4:, :4] = S.T
    np.testing.assert_array_equal(B, expected)
    assert B[2, 5] == B[5, 2] == -0.5j
    assert B[3, 4] == B[4, 3] == -2j


def test_effective_law_symmetric_variant_pattern():
    p = paired(m_prime=symmetric_variant_params(1.0, 0.5, 2.0))
    B = block_matrix(effective_law(p, 1.0, np.zeros((4, 4))))
    nz = {tuple(x) for x in np.argwhere(B != 0)}
    assert nz == {(3, 4), (4, 3)}
    assert B[3, 4] == pytest.approx(1j * (p.m_prime / p.c_prime - p.m / p.c))


def test_effective_law_zero_frequency_is_elastic():
    C = spring_network_elasticity(1.0, 0.01)
    law = effective_law(single(delta=0.3), 0.0, C)
    assert np.all(law.S == 0) and np.all(law.D == 0)


@given(st.floats(0.05, 0.95), st.floats(0.1, 5), st.floats(0.05, 5), st.floats(0, 3), st.floats(0, 3),
       st.booleans())
def test_block_symmetry(c, m, omega, dre, dim, second):
    kw = dict(m=m, c=c, delta=complex(dre, dim))
    if second:
        kw.update(m_prime=0.5 * m, c_prime=0.3)
    p = CellParams(h=0.01, K=1.3, **kw)
    B = block_matrix(effective_law(p, omega, spring_network_elasticity(p.K, p.h)))
    assert np.abs(B - B.T).max() <= 1e-12 * np.abs(B).max()
