import pytest

from qrl.config import parse_config

# coarse grid for property-style checks: dx 0.05 on [-3, 200], dt 1e-3
CI_TEXT = "dx = 0.05\nd = 200\ndt = 0.001\n"


@pytest.fixture
def ci_config():
    def make(*overrides):
        return parse_config(CI_TEXT, overrides)
    return make
