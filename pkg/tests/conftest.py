import numpy as np
import pytest

from expreuse.battery import register_battery_languages
from expreuse.engine import ReuseEngine
from expreuse.languages import LanguageRegistry
from expreuse.store import ExperimentStore, MemoryTraceStore
from expreuse.train import register_train_languages


@pytest.fixture(scope="session")
def registry() -> LanguageRegistry:
    reg = LanguageRegistry()
    register_train_languages(reg)
    register_battery_languages(reg)
    return reg


@pytest.fixture
def store() -> ExperimentStore:
    return ExperimentStore(trace_backend=MemoryTraceStore())


@pytest.fixture
def make_engine(registry):
    def factory(schemes=(), store=None, **kw) -> ReuseEngine:
        store = store or ExperimentStore(trace_backend=MemoryTraceStore())
        return ReuseEngine(registry, store, schemes, **kw)

    return factory


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
