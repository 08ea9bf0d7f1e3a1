import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from cascadeqed.cascade import CascadeParams, assemble, composite_ground, liouvillian_apply, liouvillian_superoperator
from cascadeqed.operator_algebra import dag, expect, projector, tensor
from cascadeqed.rabi import SubsystemSpec, dress

SPEC = SubsystemSpec(omega_c=1.18243, eta=0.5, theta=np.pi / 5, n_keep=4)


@pytest.fixture(scope="module")
def dressed():
    return dress(SPEC)


@pytest.fixture(scope="module")
def lossy(dressed):
    return assemble(dressed, dressed, CascadeParams(kappa1=0.04, kappa2=0.01, gamma1=0.02, gamma2=0.03, G=0.7))


def random_matrix(rng, n, hermitian=False):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (m + dag(m)) if hermitian else m


def random_density(rng, n):
    m = random_matrix(rng, n)
    rho = m @ dag(m)
    return rho / np.trace(rho)


@pytest.mark.parametrize(
    "kwargs", [dict(kappa1=0.0), dict(kappa2=-1.0), dict(gamma1=-0.1), dict(G=1.5), dict(G=-0.1)]
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        CascadeParams(**kwargs)


def test_assemble_structure(dressed):
    p = CascadeParams(kappa1=0.004, kappa2=0.001, G=1.0)
    m = assemble(dressed, dressed, p)
    assert m.dim == 16
    assert np.max(np.abs(m.H - dag(m.H))) <= 1e-12
    assert not np.any(m.lindblads[1])  # G = 1: lossless propagation
    e = np.eye(4)
    A1, A2 = tensor(dressed.A, e), tensor(e, dressed.A)
    assert np.allclose(m.L0, np.sqrt(0.004) * A1 + np.sqrt(0.001) * A2)
    bare = tensor(np.diag(dressed.energies), e) + tensor(e, np.diag(dressed.energies))
    coupling = m.H - bare
    assert np.allclose(coupling, 0.5j * np.sqrt(0.004 * 0.001) * (dag(A1) @ A2 - A1 @ dag(A2)))
    # the exchange term moves excitations between subsystems only
    assert coupling[0, 0] == 0 and np.all(coupling[0] == 0)


def test_ground_vector_and_dark(lossy):
    g = composite_ground(lossy)
    assert g[0] == 1 and np.count_nonzero(g) == 1
    rho = projector(g)
    assert expect(lossy.observables["S1dagS1"], rho) == 0
    assert expect(dag(lossy.L0) @ lossy.L0, rho) == 0
    assert np.max(np.abs(liouvillian_apply(lossy, rho))) <= 1e-12


def test_liouvillian_dimension_mismatch(lossy):
    with pytest.raises(ValueError):
        liouvillian_apply(lossy, np.eye(3))


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_liouvillian_trace_hermiticity_adjoint(lossy, seed):
    rng = np.random.default_rng(seed)
    rho = random_matrix(rng, lossy.dim)
    out = liouvillian_apply(lossy, rho)
    assert abs(np.trace(out)) <= 1e-12 * max(1.0, np.max(np.abs(rho)))
    assert np.max(np.abs(liouvillian_apply(lossy, dag(rho)) - dag(out))) <= 1e-12
    h = random_matrix(rng, lossy.dim, hermitian=True)
    hout = liouvillian_apply(lossy, h)
    assert np.max(np.abs(hout - dag(hout))) <= 1e-12


def test_superoperator_matches_apply(lossy):
    rho = random_matrix(np.random.default_rng(5), lossy.dim)
    sup = liouvillian_superoperator(lossy)
    assert np.allclose((sup @ rho.ravel()).reshape(rho.shape), liouvillian_apply(lossy, rho), atol=1e-14)


def test_relaxation_and_positivity(lossy):
    rng = np.random.default_rng(7)
    sup = liouvillian_superoperator(lossy)
    step = expm(sup * 50.0)
    for rho in (random_density(rng, lossy.dim), projector(np.eye(lossy.dim)[5])):
        v = rho.ravel()
        for _ in range(40):
            v = step @ v
            r = v.reshape(rho.shape)
            assert np.linalg.eigvalsh(0.5 * (r + dag(r)))[0] >= -1e-8
        assert np.real(r[0, 0]) > 0.999


def test_ground_stationary_without_decay(dressed):
    m = assemble(dressed, dressed, CascadeParams(gamma1=0, gamma2=0, G=1.0))
    rho = projector(composite_ground(m))
    v = expm(liouvillian_superoperator(m) * 1e4) @ rho.ravel()
    assert np.max(np.abs(v.reshape(rho.shape) - rho)) <= 1e-10
