import pytest

from renewalab import ChainSpec, build_chain


@pytest.fixture(scope="session")
def walk34():
    """Nearest-neighbor walk, up-probability 3/4."""
    return build_chain(ChainSpec("random_walk", {"q": 0.75}))


@pytest.fixture(scope="session")
def det_walk():
    """Deterministic +1 walk."""
    return build_chain(ChainSpec("random_walk", {"q": 1.0}))


@pytest.fixture(scope="session")
def reflected34():
    return build_chain(ChainSpec("reflected_walk", {"q": 0.75}))


@pytest.fixture(scope="session")
def three_branch_half():
    return build_chain(ChainSpec("three_branch", {"p": 0.5}))


@pytest.fixture(scope="session")
def counterexample():
    return build_chain(ChainSpec("counterexample"))


@pytest.fixture(scope="session")
def perturbed():
    return build_chain(ChainSpec("perturbed_walk"))
