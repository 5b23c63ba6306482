import itertools
import math

import numpy as np
import pytest

from zpgsim import (
    EmitterNetwork,
    OracleCostError,
    PropagationSettings,
    QuadratureSettings,
    balanced_splitter,
    decay_reference,
    haar_unitary,
    ideal_interference_distribution,
    permanent,
    photon_number_distribution,
    recursive_pn,
    two_level_source,
)

from conftest import random_network


def brute_permanent(A):
    n = A.shape[0]
    return sum(np.prod([A[i, s[i]] for i in range(n)]) for s in itertools.permutations(range(n)))


class TestPermanent:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_against_expansion(self, n):
        rng = np.random.default_rng(n)
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        assert abs(permanent(A) - brute_permanent(A)) < 1e-12 * max(1, abs(brute_permanent(A)))

    def test_known_values(self):
        assert permanent(np.ones((3, 3))) == pytest.approx(6)
        assert permanent(np.zeros((0, 0))) == 1
        with pytest.raises(ValueError):
            permanent(np.ones((2, 3)))


class TestHaar:
    def test_unitary_and_seeded(self):
        U = haar_unitary(5, 11)
        assert np.allclose(U.conj().T @ U, np.eye(5), atol=1e-12)
        assert np.array_equal(U, haar_unitary(5, 11))
        assert not np.allclose(U, haar_unitary(5, 12))


class TestIdealInterference:
    def test_hom_bunching(self):
        dist = ideal_interference_distribution(balanced_splitter(), [1, 1])
        assert dist[1, 1] == pytest.approx(0.0, abs=1e-15)
        assert dist[2, 0] == pytest.approx(0.5)

    def test_normalized(self):
        dist = ideal_interference_distribution(haar_unitary(4, 2), [1, 1, 0, 1])
        assert dist.total() == pytest.approx(1.0, abs=1e-12)
        assert set(dist.total_counts().nonzero()[0]) == {3}

    def test_mode_limit(self):
        with pytest.raises(ValueError):
            ideal_interference_distribution(np.eye(7), [1] * 7)


class TestDecayReference:
    def test_limits(self):
        assert decay_reference(1.0, 1.0, 0.0) == 1.0
        assert decay_reference(1.0, 1.0, 50.0) == pytest.approx(0.0, abs=1e-20)
        assert decay_reference(1.0, 2.0, 50.0) == pytest.approx(-1.0)
        with pytest.raises(ValueError):
            decay_reference(-1.0, 1.0, 1.0)


class TestRecursiveOracle:
    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_zpg(self, seed):
        net = random_network(seed)
        t1 = max(net.breakpoints) + 20 / net.gamma_min
        dist = photon_number_distribution(net, 8, PropagationSettings(t1=t1))
        ref = recursive_pn(net, 2, QuadratureSettings(50, 2, richardson=True), t1=t1)
        for n, p in ref.probs.items():
            assert abs(dist[n] - p) < 1e-5, n

    def test_completeness_of_undriven_emitter(self):
        net = EmitterNetwork((two_level_source(1.0, initial="e"),))
        res = recursive_pn(net, 2, QuadratureSettings(40, 2, richardson=True), t1=30.0)
        assert res[0] == pytest.approx(math.exp(-30.0), abs=1e-12)
        assert res[1] == pytest.approx(1.0, abs=1e-6)
        assert res[2] == pytest.approx(0.0, abs=1e-12)

    def test_cost_grows_cubically(self, rabi_network):
        quad = lambda ppl: QuadratureSettings(ppl, 3)
        a = recursive_pn(rabi_network, 3, quad(4), t1=17.0)
        b = recursive_pn(rabi_network, 3, quad(8), t1=17.0)
        exponent = math.log(b.evaluations / a.evaluations) / math.log((b.mesh_points - 1) / (a.mesh_points - 1))
        assert exponent == pytest.approx(3.0, abs=0.15)

    def test_cost_guard(self, rabi_network):
        with pytest.raises(OracleCostError) as info:
            recursive_pn(rabi_network, 3, QuadratureSettings(500, 3, max_evaluations=1e6))
        assert info.value.estimate > 1e6
