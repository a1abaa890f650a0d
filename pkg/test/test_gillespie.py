import numpy as np
import pytest
from conftest import CYCLIC3_THETA, CYCLIC3_Y

from qrlma_lib.error import InvalidInputError, TrajectoryTooShortError
from qrlma_lib.gillespie import (
    simulate_dataset,
    simulate_ssa,
    subsample,
    subsample_at_times,
)


def test_zero_rates_absorb_immediately(cyclic3):
    traj = simulate_ssa(cyclic3, np.zeros(3), CYCLIC3_Y, max_events=100, seed=0)
    assert traj.n_events == 0
    np.testing.assert_array_equal(traj.event_times, [0.0])
    np.testing.assert_array_equal(traj.final_state, CYCLIC3_Y)


def test_replay_reproduces_states(cyclic3):
    traj = simulate_ssa(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, max_events=500, seed=4)
    V = cyclic3.net_matrix
    state = CYCLIC3_Y.copy()
    for k, j in enumerate(traj.reaction_indices):
        state = state + V[:, j]
        np.testing.assert_array_equal(traj.states[k + 1], state)
    assert np.all(np.diff(traj.event_times) > 0)
    assert np.all(traj.states >= 0)


def test_molecule_count_changes_by_net_stoichiometry(cyclic3):
    traj = simulate_ssa(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, max_events=200, seed=5)
    totals = traj.states.sum(axis=1)
    per_reaction = cyclic3.net_matrix.sum(axis=0)
    np.testing.assert_array_equal(np.diff(totals), per_reaction[traj.reaction_indices])


def test_identical_seeds_identical_paths(cyclic3):
    a = simulate_ssa(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, max_events=300, seed=12)
    b = simulate_ssa(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, max_events=300, seed=12)
    np.testing.assert_array_equal(a.event_times, b.event_times)
    np.testing.assert_array_equal(a.states, b.states)
    c = simulate_ssa(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, max_events=300, seed=13)
    assert not np.array_equal(a.event_times, c.event_times)


def test_max_time_stop(pure_death):
    traj = simulate_ssa(pure_death, [1.0], [50], max_time=0.5, seed=1)
    assert traj.event_times[-1] <= 0.5


def test_stop_condition_required(pure_death):
    with pytest.raises(InvalidInputError):
        simulate_ssa(pure_death, [1.0], [50])


def test_initial_state_must_be_counts(pure_death):
    with pytest.raises(InvalidInputError):
        simulate_ssa(pure_death, [1.0], [2.5], max_events=1)


def test_pure_death_mean(pure_death):
    y0 = 1000
    finals = [
        subsample_at_times(
            simulate_ssa(pure_death, [1.0], [y0], max_time=1.0, seed=s), [0.0, 1.0]
        ).replicates[0].states[-1, 0]
        for s in range(200)
    ]
    sd = np.sqrt(y0 * np.exp(-1) * (1 - np.exp(-1)))
    assert np.mean(finals) == pytest.approx(y0 * np.exp(-1), abs=4 * sd / np.sqrt(200))


def test_subsample_full_trajectory(cyclic3):
    traj = simulate_ssa(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, max_events=50, seed=3)
    data = subsample(traj, 1, traj.n_events)
    rep = data.replicates[0]
    np.testing.assert_array_equal(rep.states, traj.states)
    np.testing.assert_array_equal(rep.times, traj.event_times)


def test_subsample_every_kth(cyclic3):
    traj = simulate_ssa(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, max_events=2000, seed=7)
    data = subsample(traj, 100, 20)
    rep = data.replicates[0]
    assert rep.n_transitions == 20
    np.testing.assert_array_equal(rep.states[3], traj.states[300])
    assert data.mean_dt == pytest.approx(traj.event_times[2000] / 20)


def test_subsample_gap_ratio(cyclic3):
    traj = simulate_ssa(cyclic3, CYCLIC3_THETA, [100, 100, 100], max_events=2000, seed=9)
    fine = subsample(traj, 10, 200).mean_dt
    coarse = subsample(traj, 100, 20).mean_dt
    assert coarse / fine == pytest.approx(10, rel=0.2)


def test_subsample_too_short(cyclic3):
    traj = simulate_ssa(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, max_events=10, seed=0)
    with pytest.raises(TrajectoryTooShortError) as info:
        subsample(traj, 5, 4)
    assert info.value.required == 20


def test_subsample_at_times_holds_last_state(pure_death):
    traj = simulate_ssa(pure_death, [1.0], [30], max_events=30, seed=2)
    grid = [0.0, traj.event_times[3], traj.event_times[3] + 1e-9]
    rep = subsample_at_times(traj, grid).replicates[0]
    np.testing.assert_array_equal(rep.states[:, 0], [30, 27, 27])


def test_dataset_is_seeded(cyclic3):
    a = simulate_dataset(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, 4, keep_every=3, T=5, seed=21)
    b = simulate_dataset(cyclic3, CYCLIC3_THETA, CYCLIC3_Y, 4, keep_every=3, T=5, seed=21)
    assert a.n_replicates == 4
    assert a.n_transitions == 20
    for ra, rb in zip(a.replicates, b.replicates):
        np.testing.assert_array_equal(ra.times, rb.times)
        np.testing.assert_array_equal(ra.states, rb.states)
    assert not np.array_equal(a.replicates[0].times, a.replicates[1].times)


def test_dataset_on_time_grid(pure_death):
    times = [0.0, 0.1, 0.2, 0.5]
    data = simulate_dataset(pure_death, [1.0], [40], 3, seed=1, times=times)
    for rep in data.replicates:
        np.testing.assert_array_equal(rep.times, times)
        assert rep.states[0, 0] == 40


def test_dataset_needs_replicates(pure_death):
    with pytest.raises(InvalidInputError):
        simulate_dataset(pure_death, [1.0], [40], 0)


@pytest.mark.slow
def test_two_state_chain_binomial_law():
    from scipy.stats import binom, chisquare

    from qrlma_lib.reaction import ReactionSystem

    system = ReactionSystem(species=["A", "B"], reactant_matrix=[[1], [0]], product_matrix=[[0], [1]])
    n, t, theta = 10, 0.5, 1.0
    finals = np.array(
        [
            subsample_at_times(
                simulate_ssa(system, [theta], [n, 0], max_time=t, seed=s), [0.0, t]
            ).replicates[0].states[-1, 1]
            for s in range(10_000)
        ]
    )
    p = 1 - np.exp(-theta * t)
    observed = np.bincount(finals.astype(int), minlength=n + 1)
    expected = 10_000 * binom.pmf(np.arange(n + 1), n, p)
    # pool the sparse tails
    keep = expected >= 5
    obs = np.append(observed[keep], observed[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    _, pvalue = chisquare(obs, exp)
    assert pvalue > 0.01
