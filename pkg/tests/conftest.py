import numpy as np
import pytest
from hypothesis import settings

from fairsched.core import NetworkState, OutputPolicy, PacketLog
from fairsched.shadow import ShadowCFN, ShadowPolicy

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def build_state(schedules, dest=None, policy=None, output_policy=OutputPolicy.FIFO, debug=True):
    """Real network plus shadow sharing one packet log."""
    if dest is None:
        dest = np.arange(schedules.n_queues)
    log = PacketLog()
    cfn = ShadowCFN(dest, policy or ShadowPolicy.fifo(), log, debug=debug)
    return NetworkState(schedules, cfn, dest, output_policy=output_policy, log=log, debug=debug)


@pytest.fixture
def make_state():
    return build_state
