import pytest

from isicap import ChannelSpec, compute_profile

from reference_values import EXAMPLE_C, EXAMPLE_K, EXAMPLE_R


@pytest.fixture(scope="session")
def example_spec():
    return ChannelSpec(k=EXAMPLE_K, c=EXAMPLE_C, r=EXAMPLE_R)


@pytest.fixture(scope="session")
def example_profile(example_spec):
    return compute_profile(example_spec)
