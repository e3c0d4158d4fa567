import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hcran_ee.channel import DropSpec, generate_drop
from hcran_ee.model import SystemConfig

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("default")

PROPERTY_CASES = 1000


def small_config(num_rbs=4, **kw):
    """A few 200 kHz RBs, light static power and a fronthaul cap that can bind."""
    base = dict(total_bandwidth_hz=200e3 * num_rbs, num_rbs=num_rbs, min_rate_bps=0.3e6,
                p_static_w=2.0, fronthaul_cap_bps=2e6)
    base.update(kw)
    return SystemConfig(**base)


def small_drop(seed, num_lpns=2, num_ues=3, num_wireless=1, num_rbs=4, isd_m=200.0, **cfg_kw):
    cfg = small_config(num_rbs=num_rbs, **cfg_kw)
    spec = DropSpec(seed=seed, num_lpns=num_lpns, num_ues=num_ues,
                    num_wireless_fronthaul=num_wireless, isd_m=isd_m)
    topo, ch = generate_drop(spec, cfg)
    return cfg, topo, ch


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
