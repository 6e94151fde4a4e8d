import pytest

import crowdcost as cc


@pytest.fixture(scope="session")
def asym_instance():
    return cc.bundled_asym_instance()


@pytest.fixture(scope="session")
def sym_instance():
    return cc.bundled_sym_instance()
