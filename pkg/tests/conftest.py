import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ofdm_mother.profiles import StandardId, builtin_profile, validate  # noqa: E402


@pytest.fixture(params=[s.value for s in StandardId])
def builtin(request):
    return validate(builtin_profile(request.param))


@pytest.fixture
def wlan():
    return validate(builtin_profile(StandardId.WLAN_80211A))


@pytest.fixture
def adsl():
    return validate(builtin_profile(StandardId.ADSL_DMT_DOWN))


@pytest.fixture
def drm():
    return validate(builtin_profile(StandardId.DRM_MODE_B))
