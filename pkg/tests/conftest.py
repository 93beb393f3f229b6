import pytest

from irs_covert.channel import NOISE_POWER_W, LinkLosses
from irs_covert.detection import PathLossRatios


@pytest.fixture(scope="session")
def losses():
    return LinkLosses.from_geometry()


@pytest.fixture(scope="session")
def ratios(losses):
    return PathLossRatios.from_losses(losses)


@pytest.fixture(scope="session")
def noise():
    return NOISE_POWER_W
