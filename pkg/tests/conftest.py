import pytest

import ednetsim as ez


@pytest.fixture(scope="session")
def case_study():
    return ez.load_study(ez.case_study_path())


@pytest.fixture(scope="session")
def case_net(case_study):
    return case_study.network
