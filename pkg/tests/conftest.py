import math

import numpy as np
import pytest

from zpgsim import EmitterNetwork, haar_unitary, two_level_source


def random_network(seed: int, M: int | None = None) -> EmitterNetwork:
    """Small driven network with random rates, pulses, detunings and circuit."""
    rng = np.random.default_rng(seed)
    M = M if M is not None else 1 + seed % 2
    sources = []
    for _ in range(M):
        sources.append(
            two_level_source(
                rng.uniform(0.5, 1.5),
                theta=rng.uniform(0.3, 2.0) * math.pi,
                tau=rng.uniform(0.2, 1.5),
                t_start=rng.uniform(0.0, 0.5),
                detuning=float(rng.choice([0.0, rng.uniform(-2, 2)])),
                dephasing=float(rng.choice([0.0, rng.uniform(0, 0.5)])),
            )
        )
    return EmitterNetwork(tuple(sources), haar_unitary(M, seed))


@pytest.fixture(scope="session")
def rabi_source():
    return two_level_source(1.0, theta=10 * math.pi, tau=2.0)


@pytest.fixture(scope="session")
def rabi_network(rabi_source):
    return EmitterNetwork((rabi_source,))


@pytest.fixture(scope="session")
def ideal_source():
    # undriven emitter prepared in |e>
    return two_level_source(1.0, initial="e")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
