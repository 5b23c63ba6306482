import math

import numpy as np
import pytest
from scipy.linalg import expm

from zpgsim import (
    EmitterNetwork,
    PropagationSettings,
    VirtualDetectorConfig,
    batch_generating_solutions,
    build_zpg,
    fourier_grid,
    propagate,
    threshold_corner_grid,
    two_level_source,
    zero_photon_probability,
)
from zpgsim.dynamics import BatchError, IntegrationError
from zpgsim.liouville import vec
from zpgsim.pulses import PulseShape

from conftest import random_network


class TestSettings:
    def test_validation(self):
        with pytest.raises(ValueError):
            PropagationSettings(rtol=0)
        with pytest.raises(ValueError):
            PropagationSettings(t0=1.0, t1=0.5)
        with pytest.raises(ValueError):
            PropagationSettings(method="Euler")

    def test_default_horizon(self, rabi_network):
        s = PropagationSettings().resolve(rabi_network)
        assert s.t1 == pytest.approx(2.0 + 40.0)


class TestPropagate:
    def test_constant_generator_matches_expm(self):
        net = EmitterNetwork((two_level_source(1.3, initial="e", dephasing=0.2),))
        L = net.lindbladian
        s = PropagationSettings(t1=2.5, exact_constant_segments=False)
        rho = propagate(L, net.joint_initial_state, s)
        ref = expm(2.5 * L.constant) @ vec(net.joint_initial_state)
        assert np.allclose(vec(rho), ref, atol=1e-10)

    def test_exact_and_rk_paths_agree(self, rabi_network):
        gen = build_zpg(rabi_network, VirtualDetectorConfig.from_inverse_z([np.exp(0.7j)]))
        s = PropagationSettings(t1=12.0)
        a = propagate(gen, rabi_network.joint_initial_state, s)
        b = propagate(gen, rabi_network.joint_initial_state, PropagationSettings(t1=12.0, exact_constant_segments=False))
        assert np.max(np.abs(a - b)) < 1e-9

    def test_smooth_pulse_uses_integrator(self):
        pulse = PulseShape("custom", math.pi, 1.0, envelope=lambda t: math.pi * math.sin(math.pi * t) ** 2 * 2)
        net = EmitterNetwork((two_level_source(1.0, pulse),))
        assert net.lindbladian.constant_on(0.0, 1.0) is None
        p0 = zero_photon_probability(net, 1.0)
        assert 0.0 < p0 < 1.0

    def test_block_propagation(self, rabi_network):
        gen = rabi_network.lindbladian
        s = PropagationSettings(t1=3.0)
        G = propagate(gen, np.eye(4, dtype=complex), s)
        rho = propagate(gen, rabi_network.joint_initial_state, s)
        assert np.allclose(G @ vec(rabi_network.joint_initial_state), vec(rho), atol=1e-10)

    def test_semigroup_across_breakpoint(self):
        net = random_network(0)
        gen = build_zpg(net, VirtualDetectorConfig.from_eta([0.6]))
        I = np.eye(4, dtype=complex)
        full = propagate(gen, I, PropagationSettings(t0=0.0, t1=3.0))
        first = propagate(gen, I, PropagationSettings(t0=0.0, t1=0.4))
        second = propagate(gen, I, PropagationSettings(t0=0.4, t1=3.0))
        assert np.allclose(second @ first, full, atol=1e-9)

    def test_sparse_action_matches_dense_exponential(self):
        from zpgsim.dynamics import _SPARSE_ACTION_MIN_DIM, _exact_step
        from zpgsim.experiments import interference_network

        net = interference_network(4, seed=2, tau=0.1)
        gen = build_zpg(net, VirtualDetectorConfig.from_inverse_z([1j, -1, 1, np.exp(0.4j)]))
        A = gen.constant_on(0.0, 0.1)
        assert A.shape[0] >= _SPARSE_ACTION_MIN_DIM
        v = vec(net.joint_initial_state)
        for dt in (0.1, 40.0):
            assert np.allclose(_exact_step(A, dt, v), expm(dt * A) @ v, atol=1e-12)

    def test_shape_mismatch(self, rabi_network):
        with pytest.raises(ValueError):
            propagate(rabi_network.lindbladian, np.eye(3), PropagationSettings(t1=1.0))

    def test_integrator_failure_is_reported(self, monkeypatch, rabi_network):
        import zpgsim.dynamics as dyn

        class Failed:
            status = -1
            message = "step size too small"
            t = np.array([0.5])

        monkeypatch.setattr(dyn, "solve_ivp", lambda *a, **k: Failed())
        s = PropagationSettings(t1=5.0, exact_constant_segments=False)
        with pytest.raises(IntegrationError, match="step size"):
            propagate(rabi_network.lindbladian, rabi_network.joint_initial_state, s)
        with pytest.raises(BatchError) as info:
            batch_generating_solutions(rabi_network, fourier_grid([2]), s)
        assert info.value.index == 0


class TestBatch:
    def test_worker_count_does_not_change_results(self):
        net = random_network(3)
        grid = fourier_grid([3, 3])
        a = batch_generating_solutions(net, grid, PropagationSettings(workers=1))
        b = batch_generating_solutions(net, grid, PropagationSettings(workers=3))
        assert np.array_equal(a.traces, b.traces)

    def test_conjugate_shortcut(self):
        net = random_network(1)
        grid = fourier_grid([4, 3])
        fast = batch_generating_solutions(net, grid, PropagationSettings(), want_states=True, want_maps=True)
        slow = batch_generating_solutions(
            net, grid, PropagationSettings(conjugate_shortcut=False), want_states=True, want_maps=True
        )
        assert fast.n_solves < slow.n_solves == len(grid)
        assert np.allclose(fast.final_states, slow.final_states, atol=1e-9)
        assert np.allclose(fast.final_maps, slow.final_maps, atol=1e-9)

    def test_maps_consistent_with_states(self):
        net = random_network(2)
        table = batch_generating_solutions(net, fourier_grid([5]), want_states=True, want_maps=True)
        rho0 = vec(net.joint_initial_state)
        for G, rho in zip(table.final_maps, table.final_states):
            assert np.allclose(G @ rho0, vec(rho), atol=1e-9)

    def test_grid_size_mismatch(self, rabi_network):
        with pytest.raises(ValueError):
            batch_generating_solutions(rabi_network, threshold_corner_grid(2))

    def test_horizon_convergence(self, rabi_network):
        a = zero_photon_probability(rabi_network, 0.5, PropagationSettings(tail_lifetimes=30))
        b = zero_photon_probability(rabi_network, 0.5, PropagationSettings(tail_lifetimes=40))
        assert abs(a - b) < 1e-12


class TestZeroPhotonProbability:
    def test_no_detection_is_certain(self, rabi_network):
        assert zero_photon_probability(rabi_network, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_real_and_complex_returns(self, rabi_network):
        assert isinstance(zero_photon_probability(rabi_network, 0.3), float)
        assert isinstance(zero_photon_probability(rabi_network, 0.3 + 0.1j), complex)
