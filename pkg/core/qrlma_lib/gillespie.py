"""Exact stochastic simulation (Gillespie direct method) and observation subsampling."""
import logging
from functools import partial
from typing import Any, List, Optional, Sequence, Union

import numpy as np

from qrlma_lib.error import InvalidInputError, TrajectoryTooShortError
from qrlma_lib.parallel import parallel_map
from qrlma_lib.reaction import (
    ReactionSystem,
    binomial_factors,
    check_state,
    check_theta,
)
from qrlma_lib.types import ObservationSet, Replicate, Trajectory

logger = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.SeedSequence]


def make_generator(seed: SeedLike) -> np.random.Generator:
    """Counter-based stream; spawned SeedSequences give independent replicate streams."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def simulate_ssa(
    system: ReactionSystem,
    theta: Any,
    y0: Any,
    max_time: Optional[float] = None,
    max_events: Optional[int] = None,
    seed: SeedLike = None,
) -> Trajectory:
    if max_time is None and max_events is None:
        raise InvalidInputError("simulate_ssa needs max_time or max_events")
    theta = check_theta(system, theta)
    y = check_state(system, y0)
    if np.any(y < 0) or np.any(y != np.round(y)):
        raise InvalidInputError("Initial state must be nonnegative integer counts")

    rng = make_generator(seed)
    K = system.reactant_matrix
    V = system.net_matrix.T.astype(float)
    limit_events = np.inf if max_events is None else max_events
    limit_time = np.inf if max_time is None else max_time

    times: List[float] = [0.0]
    states: List[np.ndarray] = [y.copy()]
    fired: List[int] = []
    t = 0.0
    while len(fired) < limit_events:
        rates = theta * binomial_factors(y, K).prod(axis=0)
        total = rates.sum()
        if total <= 0:
            break
        t += rng.exponential(1.0 / total)
        if t > limit_time:
            break
        j = int(np.searchsorted(np.cumsum(rates) / total, rng.random(), side="right"))
        j = min(j, len(rates) - 1)
        y = y + V[j]
        times.append(t)
        states.append(y)
        fired.append(j)

    return Trajectory(
        species=list(system.species),
        event_times=np.asarray(times),
        states=np.asarray(states),
        reaction_indices=np.asarray(fired, dtype=np.int64),
    )


def subsample(trajectory: Trajectory, keep_every: int, T: int) -> ObservationSet:
    """The initial state plus the state after every keep_every-th event, T times."""
    if keep_every < 1 or T < 1:
        raise InvalidInputError("keep_every and T must be positive")
    required = keep_every * T
    if trajectory.n_events < required:
        raise TrajectoryTooShortError(required, trajectory.n_events)
    idx = np.arange(T + 1) * keep_every
    return ObservationSet(
        species=list(trajectory.species),
        replicates=[
            Replicate(times=trajectory.event_times[idx], states=trajectory.states[idx])
        ],
    )


def subsample_at_times(trajectory: Trajectory, times: Sequence[float]) -> ObservationSet:
    """State in force at each grid time (the last event at or before it)."""
    grid = np.asarray(times, dtype=float)
    idx = np.searchsorted(trajectory.event_times, grid, side="right") - 1
    if np.any(idx < 0):
        raise InvalidInputError("Grid times must not precede the trajectory start")
    return ObservationSet(
        species=list(trajectory.species),
        replicates=[Replicate(times=grid, states=trajectory.states[idx])],
    )


def _simulate_replicate(
    seed: np.random.SeedSequence,
    system: ReactionSystem,
    theta: np.ndarray,
    y0: np.ndarray,
    keep_every: int,
    T: int,
    times: Optional[Sequence[float]],
) -> ObservationSet:
    if times is not None:
        traj = simulate_ssa(system, theta, y0, max_time=float(times[-1]), seed=seed)
        return subsample_at_times(traj, times)
    traj = simulate_ssa(system, theta, y0, max_events=keep_every * T, seed=seed)
    return subsample(traj, keep_every, T)


def simulate_dataset(
    system: ReactionSystem,
    theta: Any,
    y0: Any,
    n_replicates: int,
    keep_every: int = 1,
    T: int = 20,
    seed: SeedLike = None,
    times: Optional[Sequence[float]] = None,
    workers: Optional[int] = 1,
    progress: bool = False,
) -> ObservationSet:
    """n_replicates independent SSA runs, each subsampled by event count or on a time grid."""
    if n_replicates < 1:
        raise InvalidInputError("n_replicates must be positive")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n_replicates)
    run = partial(
        _simulate_replicate,
        system=system,
        theta=np.asarray(theta, dtype=float),
        y0=np.asarray(y0, dtype=float),
        keep_every=keep_every,
        T=T,
        times=times,
    )
    sets = parallel_map(run, children, workers=workers, desc="simulate", progress=progress)
    data = ObservationSet.concat(sets)
    logger.debug(
        f"Simulated {n_replicates} replicates, mean dt {data.mean_dt:.4g}"
    )
    return data
