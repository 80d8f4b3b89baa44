import os
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# Real SemEval-2014 XML files, if present, live here as
# {laptop,restaurant}_{train,test}.xml (see README).
SEMEVAL_DIR = os.environ.get("ABSALAB_SEMEVAL_DIR", "")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def semeval_dir() -> Path | None:
    if SEMEVAL_DIR and Path(SEMEVAL_DIR).is_dir():
        return Path(SEMEVAL_DIR)
    return None


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def laptop_train_xml() -> str:
    return (FIXTURES / "laptop_train.xml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def laptop_test_xml() -> str:
    return (FIXTURES / "laptop_test.xml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def restaurant_train_xml() -> str:
    return (FIXTURES / "restaurant_train.xml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def restaurant_test_xml() -> str:
    return (FIXTURES / "restaurant_test.xml").read_text(encoding="utf-8")
