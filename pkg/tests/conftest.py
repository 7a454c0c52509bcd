from __future__ import annotations

import pytest

from config.settings import DatasetSpec, HarnessConfig
from tests.helpers import make_config, write_source_dataset


@pytest.fixture
def source_spec(tmp_path) -> DatasetSpec:
    return write_source_dataset(tmp_path / "data")


@pytest.fixture
def harness_config(source_spec) -> HarnessConfig:
    return make_config([source_spec])
