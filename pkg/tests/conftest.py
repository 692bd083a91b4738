import pytest

from endogrid import limit_law


@pytest.fixture(scope="session")
def tables():
    """Shared sampler tables; built once, ~1 s."""
    return limit_law.get_tables(1e-8)
