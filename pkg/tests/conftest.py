import numpy as np
import pytest

from mcopt.dataset import ObjectiveTable
from mcopt.space import ProviderSpace, SearchSpace, default_space


@pytest.fixture
def space88():
    """The built-in three-provider space: 24 + 16 + 48 = 88 points."""
    return default_space()


@pytest.fixture
def azure_like():
    return ProviderSpace(name="azure", params=(("family", ("D_v2", "D_v3")), ("cpu_size", ("2", "4"))))


@pytest.fixture
def aws_like():
    return ProviderSpace(name="aws", params=(("family", ("m4", "r4", "c4")), ("size", ("large", "xlarge"))))


@pytest.fixture
def two_provider_space():
    """Two providers with 2 configs each over 2 node counts (4 points each)."""
    return SearchSpace(
        providers=(
            ProviderSpace(name="p0", params=(("a", ("x", "y")),)),
            ProviderSpace(name="p1", params=(("b", ("u", "v")),)),
        ),
        node_counts=(2, 4),
    )


def random_space(rng: np.random.Generator) -> SearchSpace:
    providers = []
    for k in range(int(rng.integers(1, 4))):
        params = tuple(
            (f"p{i}", tuple(f"v{j}" for j in range(int(rng.integers(1, 4)))))
            for i in range(int(rng.integers(1, 4)))
        )
        providers.append(ProviderSpace(name=f"prov{k}", params=params))
    n_nodes = int(rng.integers(1, 5))
    nodes = tuple(sorted(int(n) for n in rng.choice(np.arange(1, 30), size=n_nodes, replace=False)))
    return SearchSpace(providers=tuple(providers), node_counts=nodes)


def make_table(space: SearchSpace, cell_fn, workloads=("w0",)) -> ObjectiveTable:
    """Build a complete table from cell_fn(workload, point) -> (runtime, cost)."""
    from mcopt.space import enumerate_all

    entries = {}
    for w in workloads:
        for p in enumerate_all(space):
            entries[(w, p)] = cell_fn(w, p)
    return ObjectiveTable(space, list(workloads), entries)
