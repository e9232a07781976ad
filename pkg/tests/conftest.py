import math

import numpy as np
import pytest

from cpdilation.algebra import channel_from_kraus, random_channel


@pytest.fixture
def half():
    """Scalar channel phi(x) = x / 2 on M_1."""
    return channel_from_kraus(1, [np.array([[1 / math.sqrt(2)]])])


@pytest.fixture
def ident2():
    return channel_from_kraus(2, [np.eye(2)])


@pytest.fixture
def unital2():
    return random_channel(2, 2, seed=7, unital=True)


@pytest.fixture
def halved2():
    return random_channel(2, 3, seed=11, unital=False, lam=0.5)


def slow_moment(indices, mats, phi):
    """Reference bracket: split at the rightmost zero, lower indices one step at a time."""
    idx = list(indices)
    zeros = [i for i, n in enumerate(idx) if n == 0]
    if zeros:
        z = zeros[-1]
        out = np.asarray(mats[z], dtype=complex)
        if z > 0:
            out = slow_moment(idx[:z], mats[:z], phi) @ out
        if z + 1 < len(idx):
            out = out @ slow_moment(idx[z + 1 :], mats[z + 1 :], phi)
        return out
    return phi(slow_moment([n - 1 for n in idx], mats, phi))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
