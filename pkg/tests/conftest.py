import pytest
from hypothesis import settings

from eqcouple.acceptance import running_instance

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def running():
    return running_instance()
