import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from zpgsim.liouville import (
    HilbertSpace,
    TimeDependentGenerator,
    commutator_superop,
    dissipator_superop,
    embed_operator,
    lindbladian,
    projector,
    sandwich_superop,
    sigma_minus,
    sigma_plus,
    sigma_x,
    sigma_z,
    trace_row,
    unvec,
    vec,
)
from zpgsim.pulses import square_pulse
from zpgsim.zpg import EmitterNetwork, two_level_source


def random_matrix(rng, d):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def random_density(rng, d):
    a = random_matrix(rng, d)
    rho = a @ a.conj().T
    return rho / np.trace(rho)


class TestOperators:
    def test_two_level_convention(self):
        # basis (|g>, |e>), sigma lowers e -> g
        g, e = np.array([1, 0]), np.array([0, 1])
        assert np.allclose(sigma_minus() @ e, g)
        assert np.allclose(sigma_minus() @ g, 0)
        assert np.allclose(sigma_plus(), sigma_minus().conj().T)
        assert np.allclose(sigma_z(), np.diag([-1, 1]))
        assert np.allclose(sigma_x(), sigma_minus() + sigma_plus())
        assert np.allclose(projector(1), np.outer(e, e))

    def test_vec_roundtrip(self):
        rng = np.random.default_rng(0)
        A = random_matrix(rng, 3)
        assert np.array_equal(unvec(vec(A), 3), A)
        assert np.isclose(trace_row(3) @ vec(A), np.trace(A))

    def test_sandwich_matches_products(self):
        rng = np.random.default_rng(1)
        a, b, X = (random_matrix(rng, 3) for _ in range(3))
        assert np.allclose(sandwich_superop(a, b) @ vec(X), vec(a @ X @ b.conj().T))

    def test_commutator_superop(self):
        rng = np.random.default_rng(2)
        H = random_matrix(rng, 3)
        H = H + H.conj().T
        X = random_matrix(rng, 3)
        assert np.allclose(commutator_superop(H) @ vec(X), vec(-1j * (H @ X - X @ H)))

    def test_non_hermitian_hamiltonian_warns(self):
        with pytest.warns(UserWarning):
            commutator_superop(sigma_minus())


class TestEmbedding:
    def test_slot_placement(self):
        space = HilbertSpace((2, 3))
        op = embed_operator(sigma_minus(), 0, space)
        assert np.allclose(op, np.kron(sigma_minus(), np.eye(3)))

    def test_operators_on_distinct_slots_commute(self):
        space = HilbertSpace((2, 2, 2))
        a = embed_operator(sigma_minus(), 0, space)
        b = embed_operator(sigma_plus(), 2, space)
        assert np.allclose(a @ b, b @ a)

    def test_bad_inputs(self):
        space = HilbertSpace((2, 2))
        with pytest.raises(ValueError):
            embed_operator(np.eye(3), 0, space)
        with pytest.raises(IndexError):
            embed_operator(np.eye(2), 2, space)


class TestLindbladian:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(2, 4))
    def test_trace_annihilation(self, seed, d):
        rng = np.random.default_rng(seed)
        H = random_matrix(rng, d)
        H = H + H.conj().T
        c = random_matrix(rng, d)
        L = commutator_superop(H) + dissipator_superop(c)
        assert np.max(np.abs(trace_row(d) @ L)) < 1e-12 * max(1.0, np.max(np.abs(L)))

    def test_network_generator_is_trace_free(self):
        net = EmitterNetwork((two_level_source(1.0, theta=np.pi, tau=0.5, dephasing=0.3),) * 2)
        L = net.lindbladian
        for t in (0.1, 0.7):
            assert np.max(np.abs(trace_row(4) @ L(t))) < 1e-12

    def test_semigroup_for_constant_generator(self):
        rng = np.random.default_rng(3)
        c = random_matrix(rng, 3)
        L = dissipator_superop(c)
        assert np.allclose(expm(0.3 * L) @ expm(0.4 * L), expm(0.7 * L), atol=1e-12)

    def test_negative_rate_rejected(self):
        class Raw:
            # bypasses SourceSpec validation
            dim = 2
            hamiltonian_terms = ()
            dissipation_channels = ((sigma_z(), -1.0),)
            collection_op = sigma_minus()
            collection_rate = 1.0
            breakpoints = ()

        with pytest.raises(ValueError):
            lindbladian([Raw()], HilbertSpace((2,)))

    def test_driven_parts_and_breakpoints(self):
        pulse = square_pulse(np.pi, 0.5, 0.2)
        net = EmitterNetwork((two_level_source(1.0, pulse),))
        L = net.lindbladian
        assert isinstance(L, TimeDependentGenerator)
        assert L.breakpoints == (0.2, 0.7)
        assert not np.allclose(L(0.3), L(0.8))
        assert np.allclose(L(0.8), L.constant)
        assert L.constant_on(0.2, 0.7) is not None
        assert np.allclose(L.constant_on(0.2, 0.7), L(0.4))
