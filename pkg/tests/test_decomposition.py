import math

import numpy as np
import pytest

from zpgsim import (
    AliasingError,
    EmitterNetwork,
    PropagationSettings,
    batch_generating_solutions,
    fourier_grid,
    g2,
    haar_unitary,
    hom_coincidence,
    hom_reference_ratio,
    invert_distribution,
    invert_states,
    mean_photon_number,
    parity,
    photon_number_distribution,
    threshold_corner_grid,
    threshold_distribution,
    threshold_from_numbers,
    tvd,
    two_level_source,
    vacuum_source,
)
from zpgsim.dynamics import GeneratingTable

from conftest import random_network


@pytest.fixture(scope="module")
def rabi_dist(rabi_network):
    return photon_number_distribution(rabi_network, 14)


class TestInversion:
    def test_completeness(self, rabi_dist):
        assert rabi_dist.total() == pytest.approx(1.0, abs=1e-10)
        assert rabi_dist.residue < 1e-12
        assert rabi_dist.tail_mass < 1e-8

    def test_weight_through_six_photons(self, rabi_dist):
        assert all(rabi_dist[n] > 1e-3 for n in range(7))
        assert rabi_dist[14] == 0.0

    def test_aliasing_shrinks_with_truncation(self, rabi_network):
        ref = photon_number_distribution(rabi_network, 20).probs[:4]
        errs = [np.max(np.abs(photon_number_distribution(rabi_network, N).probs[:4] - ref)) for N in (5, 7, 9, 11)]
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_factorizes_without_interference(self):
        a = two_level_source(1.0, theta=np.pi, tau=0.4)
        b = two_level_source(0.7, theta=2.5, tau=1.0, dephasing=0.2)
        joint = photon_number_distribution(EmitterNetwork((a, b)), [6, 6])
        pa = photon_number_distribution(EmitterNetwork((a,)), 6).probs
        pb = photon_number_distribution(EmitterNetwork((b,)), 6).probs
        assert np.allclose(joint.probs, np.outer(pa, pb), atol=1e-10)

    def test_detector_permutation_invariance(self):
        net = random_network(5, M=2)
        swapped = EmitterNetwork(net.sources, net.unitary[::-1])
        p = photon_number_distribution(net, [5, 5]).probs
        q = photon_number_distribution(swapped, [5, 5]).probs
        assert np.allclose(p, q.T, atol=1e-10)

    def test_vacuum_input_keeps_photon_count(self):
        src = two_level_source(1.0, initial="e")
        net = EmitterNetwork((src, vacuum_source()), haar_unitary(2, 4))
        dist = photon_number_distribution(net, [3, 3])
        assert dist.total_counts()[1] == pytest.approx(1.0, abs=1e-10)

    def test_auto_truncation(self, rabi_network):
        dist = photon_number_distribution(rabi_network, 4, auto=True, tail_tol=1e-9)
        assert dist.truncations[0] >= 16 and dist.tail_mass < 1e-9

    def test_aliasing_error(self):
        grid = fourier_grid([4])
        table = GeneratingTable(grid, np.array([1.0, 0.5j, 0.2, 0.1]), 0.0, 1.0)
        with pytest.raises(AliasingError):
            invert_distribution(table)

    def test_wrong_grid_kind(self, rabi_network):
        table = batch_generating_solutions(rabi_network, threshold_corner_grid(1))
        with pytest.raises(ValueError):
            invert_distribution(table)


class TestConditionalStates:
    def test_traces_match_distribution(self):
        net = random_network(3)
        table = batch_generating_solutions(net, fourier_grid([4, 4]), want_states=True, want_maps=True)
        states = invert_states(table)
        dist = invert_distribution(table)
        assert np.allclose(states.probabilities(), dist.probs, atol=1e-10)
        assert states.hermiticity_deviation < 1e-9

    def test_maps_only_table(self):
        net = random_network(0)
        full = invert_states(batch_generating_solutions(net, fourier_grid([6]), want_states=True))
        maps_only = invert_states(batch_generating_solutions(net, fourier_grid([6]), want_maps=True))
        assert np.allclose(full.states, maps_only.states, atol=1e-10)

    def test_requires_payload(self, rabi_network):
        with pytest.raises(ValueError):
            invert_states(batch_generating_solutions(rabi_network, fourier_grid([3])))


class TestThreshold:
    def test_corners_match_coarse_grained_numbers(self):
        net = random_network(7, M=2)
        thr = threshold_distribution(batch_generating_solutions(net, threshold_corner_grid(2)))
        coarse = threshold_from_numbers(photon_number_distribution(net, [10, 10]))
        assert np.allclose(thr.probs, coarse.probs, atol=1e-9)

    def test_single_detector_brightness(self, rabi_network, rabi_dist):
        thr = threshold_distribution(batch_generating_solutions(rabi_network, threshold_corner_grid(1)))
        assert thr.brightness == pytest.approx(1 - rabi_dist[0], abs=1e-10)


class TestFiguresOfMerit:
    def test_ideal_source(self, ideal_source):
        net = EmitterNetwork((ideal_source,))
        assert mean_photon_number(net).value == pytest.approx(1.0, abs=1e-8)
        assert abs(g2(net).value) < 1e-8

    def test_mean_scales_with_efficiency(self, ideal_source):
        net = EmitterNetwork((ideal_source,))
        assert mean_photon_number(net, eta_real=0.4).value == pytest.approx(0.4, abs=1e-8)

    def test_step_validation(self, rabi_network):
        with pytest.raises(ValueError):
            mean_photon_number(rabi_network, eta_step=0.1)

    def test_dark_source_g2_undefined(self):
        with pytest.raises(ZeroDivisionError):
            g2(EmitterNetwork((two_level_source(1.0),)))

    def test_rabi_moments(self, rabi_network, rabi_dist):
        n = np.arange(14)
        mu = n @ rabi_dist.probs
        assert mean_photon_number(rabi_network).value == pytest.approx(mu, rel=1e-5)
        assert g2(rabi_network).value == pytest.approx((n * (n - 1)) @ rabi_dist.probs / mu**2, rel=1e-4)

    def test_parity(self, rabi_network, rabi_dist):
        signs = (-1.0) ** np.arange(14)
        assert parity(rabi_network) == pytest.approx(signs @ rabi_dist.probs, abs=1e-10)


class TestInterference:
    def test_hom_dip(self):
        src = two_level_source(1.0, theta=np.pi, tau=0.05)
        assert hom_coincidence(src) < 0.02

    def test_reference_ratio_below_one(self):
        src = two_level_source(1.0, theta=np.pi, tau=0.05)
        assert hom_reference_ratio(src, {"hamiltonian_terms": two_level_source(
            1.0, theta=np.pi, tau=0.05, detuning=20.0).hamiltonian_terms}) < 0.05

    def test_tvd(self):
        assert tvd({(0,): 0.5, (1,): 0.5}, {(0,): 1.0}) == pytest.approx(0.5)
        assert tvd({(1, 0): 0.2}, {(1, 0): 0.2}) == 0.0
