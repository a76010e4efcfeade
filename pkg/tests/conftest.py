import pytest

import persuasion as P


@pytest.fixture(scope="session")
def tax1():
    return P.bundled_taxonomy("subtask1")


@pytest.fixture(scope="session")
def tax2():
    return P.bundled_taxonomy("subtask2")


@pytest.fixture(scope="session")
def tree1(tax1):
    return P.dag_to_tree(tax1)
