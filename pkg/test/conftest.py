import logging

import numpy as np
import pytest

from qrlma_lib.fixtures import cyclic3_system, load_preset
from qrlma_lib.forecast import lma_predict
from qrlma_lib.reaction import ReactionSystem
from qrlma_lib.types import ObservationSet, Replicate

CYCLIC3_Y = np.array([10.0, 20.0, 10.0])
CYCLIC3_THETA = np.array([0.2, 0.1, 0.2])


@pytest.fixture(autouse=True)
def reset_loggers():
    yield
    for name in ("qrlma_logger", "qrlma_lib", "py.warnings"):
        logger = logging.getLogger(name)
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
        logger.propagate = True
        logger.setLevel(logging.NOTSET)
    logging.captureWarnings(False)


@pytest.fixture
def cyclic3() -> ReactionSystem:
    return cyclic3_system()


@pytest.fixture
def pure_death() -> ReactionSystem:
    return ReactionSystem(species=["X"], reactant_matrix=[[1]], product_matrix=[[0]])


@pytest.fixture
def source_only() -> ReactionSystem:
    return ReactionSystem(species=["X"], reactant_matrix=[[0]], product_matrix=[[1]])


@pytest.fixture
def chain3() -> ReactionSystem:
    return load_preset("unitary-chain3").system


def noise_free(
    system: ReactionSystem, theta, starts, horizons
) -> ObservationSet:
    """Replicates whose every observation is the closed-form prediction from the previous one."""
    replicates = []
    for y0 in starts:
        states = [np.asarray(y0, dtype=float)]
        for s in horizons:
            states.append(lma_predict(system, theta, states[-1], s))
        times = np.concatenate([[0.0], np.cumsum(horizons)])
        replicates.append(Replicate(times=times, states=np.array(states)))
    return ObservationSet(species=list(system.species), replicates=replicates)
