import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elastowave import physics as ph
from elastowave.errors import AnisotropicUnsupported, InvalidLame, NotSPD


def test_isotropic_stiffness_examples():
    C = ph.isotropic_stiffness(1.0, 1.0)
    assert (np.diag(C)[:3] == 3.0).all()
    assert C[0, 1] == C[0, 2] == C[1, 2] == 1.0
    assert (np.diag(C)[3:] == 1.0).all()
    assert not C[:3, 3:].any()
    C0 = ph.isotropic_stiffness(0.0, 1.0)
    np.testing.assert_array_equal(C0, np.diag([2.0, 2.0, 2.0, 1.0, 1.0, 1.0]))


def test_isotropic_stiffness_from_benchmark_speeds():
    m = ph.material_from_speeds(2.7e3, 6000.0, 3464.0)
    assert m.mu == pytest.approx(3.2398e10, rel=1e-4)
    assert m.lam == pytest.approx(3.2404e10, rel=1e-4)
    cp, cs = ph.wave_speeds(m)
    assert cp == pytest.approx(6000.0, rel=1e-9)
    assert cs == pytest.approx(3464.0, rel=1e-9)


def test_lame_preconditions():
    with pytest.raises(InvalidLame):
        ph.isotropic_stiffness(1.0, 0.0)
    with pytest.raises(InvalidLame):
        ph.isotropic_stiffness(-2.0, 1.0)
    # lambda in (-mu, -2mu/3] passes the precondition but is indefinite
    with pytest.raises(NotSPD):
        ph.isotropic_stiffness(-0.7, 1.0)
    with pytest.raises(InvalidLame):
        ph.material_from_lame(0.0, 1.0, 1.0)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10))
@settings(max_examples=50, deadline=None)
def test_stiffness_spectrum(rho, lam, mu):
    C = ph.isotropic_stiffness(lam, mu)
    ev = np.sort(np.linalg.eigvalsh(C))
    want = np.sort([3 * lam + 2 * mu, 2 * mu, 2 * mu, mu, mu, mu])
    np.testing.assert_allclose(ev, want, rtol=1e-10, atol=1e-12)


def test_wave_speeds_simple():
    m = ph.material_from_lame(1.0, 1.0, 1.0)
    cp, cs = ph.wave_speeds(m)
    assert cp == pytest.approx(np.sqrt(3.0))
    assert cs == pytest.approx(1.0)
    m2 = ph.material_from_speeds(2600.0, 4000.0, 2000.0)
    assert ph.wave_speeds(m2) == (pytest.approx(4000.0), pytest.approx(2000.0))


def test_anisotropic_rejected_for_speeds():
    C = ph.isotropic_stiffness(1.0, 1.0).copy()
    C[0, 0] = 4.0  # break isotropy, keep SPD
    m = ph.material_from_stiffness(1.0, C)
    with pytest.raises(AnisotropicUnsupported):
        ph.wave_speeds(m)
    with pytest.raises(AnisotropicUnsupported):
        _ = m.cp


def test_stiffness_validation():
    with pytest.raises(NotSPD):
        ph.material_from_stiffness(1.0, np.eye(6) - 2)
    bad = np.eye(6)
    bad[0, 1] = 0.5
    with pytest.raises(NotSPD):
        ph.material_from_stiffness(1.0, bad)


def test_impedance():
    m = ph.material_from_speeds(2700.0, 6000.0, 3464.0)
    assert ph.impedance(m, "x", "x") == pytest.approx(1.62e7)
    assert ph.impedance(m, "x", "y") == pytest.approx(2700.0 * 3464.0)
    deg = ph.material_from_lame(1.0, -1e-12, 1.0)
    assert ph.impedance(deg, "x", "x") == pytest.approx(np.sqrt(2), rel=1e-6)


def test_traction_examples():
    assert (ph.traction(np.array([1.0, 0, 0, 0, 0, 0]), "x") == [1, 0, 0]).all()
    assert (ph.traction(np.array([0.0, 0, 0, 1, 0, 0]), "y") == [1, 0, 0]).all()
    assert not ph.traction(np.zeros(6), "z").any()
    # stacked array form used by the solver
    sig = np.random.default_rng(0).standard_normal((6, 4, 5))
    T = ph.traction(sig, "z")
    assert T.shape == (3, 4, 5)
    assert (T[0] == sig[4]).all() and (T[1] == sig[5]).all() and (T[2] == sig[2]).all()


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 100))
@settings(max_examples=100, deadline=None)
def test_characteristics_roundtrip(v, T, Z):
    q, p = ph.characteristics(v, T, Z)
    v2 = (q + p) / Z
    T2 = q - p
    # q - p cancels to T with absolute error on the scale of Z*v
    scale = max(1.0, abs(T), abs(Z * v))
    assert abs(v2 - v) <= 1e-14 * max(1.0, abs(v), abs(T) / Z)
    assert abs(T2 - T) <= 1e-14 * scale


def test_characteristics_examples():
    assert ph.characteristics(0.0, 0.0, 1.0) == (0.0, 0.0)
    assert ph.characteristics(1.0, 0.0, 2.0) == (1.0, 1.0)


def test_coefficient_matrices_symmetric_binary():
    for dim, axes in ((3, "xyz"), (2, "xy")):
        for ax in axes:
            A = ph.coefficient_matrix(ax, dim)
            assert (A == A.T).all()
            assert set(np.unique(A)) <= {0.0, 1.0}


def test_eigen_spectrum_benchmark_materials():
    for rho, cp, cs in ((2700.0, 6000.0, 3464.0), (2600.0, 4000.0, 2000.0)):
        m = ph.material_from_speeds(rho, cp, cs)
        want = np.sort([cp, -cp, cs, cs, -cs, -cs, 0.0, 0.0, 0.0])
        for ax in "xyz":
            got = ph.eigen_spectrum(m, ax)
            np.testing.assert_allclose(got, want, rtol=0, atol=1e-9 * cp)


def test_eigen_spectrum_unit_material():
    m = ph.material_from_lame(1.0, 1.0, 1.0)
    s3 = np.sqrt(3.0)
    want = np.sort([s3, -s3, 1, 1, -1, -1, 0, 0, 0])
    np.testing.assert_allclose(ph.eigen_spectrum(m, "y"), want, atol=1e-12)


def test_2d_restriction_of_coefficients():
    keep = [0, 1, 3, 4, 6]  # vx, vy, xx, yy, xy slots of the 9-component state
    for ax in "xy":
        A3 = ph.coefficient_matrix(ax, 3)[np.ix_(keep, keep)]
        np.testing.assert_array_equal(A3, ph.coefficient_matrix(ax, 2))
    # closure of the in-plane subsystem under z-invariance with vz = 0: the
    # in-plane velocity rows read only in-plane stress slots, equivalently
    # the dropped strain slots (zz, xz, yz) are fed only by vz
    for ax in "xy":
        a = ph.A_BLOCK_3D[ax]
        assert not a[np.ix_([0, 1], [2, 4, 5])].any()
    # retained stress rows read no shear strains beyond gamma_xy; the ezz
    # column is harmless because ezz itself stays zero
    C = ph.isotropic_stiffness(2.0, 3.0)
    assert not C[np.ix_([0, 1, 3], [4, 5])].any()
    assert C[3, 2] == 0.0


def test_reduce_to_2d_stiffness():
    C = ph.isotropic_stiffness(2.0, 3.0)
    C2 = ph.reduce_to_2d(C)
    np.testing.assert_array_equal(
        C2, np.array([[8.0, 2.0, 0.0], [2.0, 8.0, 0.0], [0.0, 0.0, 3.0]]))


def test_sig_slots_match_a_blocks():
    # the slot tables are the nonzero pattern of a_xi^T embedded in the state
    for dim in (2, 3):
        nv = dim
        for ax in ph.axes_of(dim):
            a = ph.a_block(ax, dim)
            slots = ph.sig_slots(ax, dim)
            for fam in range(nv):
                cols = np.nonzero(a[fam])[0]
                assert len(cols) == 1
                assert slots[fam] == nv + cols[0]
