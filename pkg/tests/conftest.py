import numpy as np
import pytest

from lazytensor import RankOneSum, RegularizedModel, SymmetricTensor


def random_model(rng, p, n, sigma=None, scale=1.0):
    """Regularized model with random derivative snapshots and a random nonsymmetric tensor."""
    derivs = []
    for q in range(1, p):
        derivs.append(SymmetricTensor(scale * rng.standard_normal((n,) * q)))
    tensor = RankOneSum(scale * rng.standard_normal((n,) * p))
    if sigma is None:
        sigma = float(rng.uniform(0.5, 20.0))
    return RegularizedModel(
        anchor=rng.standard_normal(n),
        f_anchor=float(rng.standard_normal()),
        derivs=tuple(derivs),
        tensor=tensor,
        sigma=sigma,
    )


def central_gradient(fun, x, step=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (fun(x + e) - fun(x - e)) / (2 * step)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
