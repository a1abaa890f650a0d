"""Reaction-network selection by BIC: stepwise and exhaustive search, model weights, relevance."""
import itertools
import logging
import warnings
from functools import partial
from typing import Dict, FrozenSet, Iterable, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from qrlma_lib.error import InvalidInputError, QrlmaError
from qrlma_lib.forecast import TransitionBatch
from qrlma_lib.infer import BIC_CONVENTION, FitConfig, FitResult, gaussian_bic, lma_fit
from qrlma_lib.parallel import parallel_map
from qrlma_lib.reaction import ReactionSystem
from qrlma_lib.types import ObservationSet

logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 12


class CandidateLibrary(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    full_system: ReactionSystem
    fixed_reactions: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self) -> "CandidateLibrary":
        r = self.full_system.n_reactions
        bad = [j for j in self.fixed_reactions if not 0 <= j < r]
        if bad:
            raise InvalidInputError(f"Fixed reaction indices out of range: {bad}")
        return self

    @property
    def free_reactions(self) -> List[int]:
        fixed = set(self.fixed_reactions)
        return [j for j in range(self.full_system.n_reactions) if j not in fixed]


class SelectionConfig(BaseModel):
    stopping: Literal["full_sweep", "first_minimum"] = "full_sweep"
    fit: FitConfig = Field(default_factory=FitConfig)
    workers: Optional[int] = 1
    progress: bool = False


class ModelRecord(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    reactions: List[int]
    labels: List[str]
    bic: float
    objective: float
    converged: bool
    theta_hat: List[float] = Field(default_factory=list)
    non_identifiable: bool = False
    move: str = ""
    message: str = ""

    @property
    def complexity(self) -> int:
        return len(self.reactions)

    def sort_key(self) -> Tuple[float, int, Tuple[int, ...]]:
        return (self.bic, len(self.reactions), tuple(self.reactions))


class SelectionTrace(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    reaction_labels: List[str]
    stopping: str
    bic_convention: str
    steps: List[ModelRecord] = Field(default_factory=list)
    evaluated: List[ModelRecord] = Field(default_factory=list)
    best_model: Optional[ModelRecord] = None

    def complexity_profile(self) -> pd.DataFrame:
        best: Dict[int, ModelRecord] = {}
        for rec in self.evaluated:
            k = rec.complexity
            if k not in best or rec.sort_key() < best[k].sort_key():
                best[k] = rec
        return pd.DataFrame(
            [
                {
                    "complexity": k,
                    "best_bic": best[k].bic,
                    "model_reactions": " ".join(best[k].labels),
                }
                for k in sorted(best)
            ],
            columns=["complexity", "best_bic", "model_reactions"],
        )


def bic(fit: FitResult, data: ObservationSet) -> float:
    return gaussian_bic(fit.objective, data.n_residual_entries, len(fit.theta_hat))


def _record(
    reactions: List[int],
    system: ReactionSystem,
    data: ObservationSet,
    config: FitConfig,
    batch: Optional[TransitionBatch],
) -> ModelRecord:
    labels = [system.reaction_labels[j] for j in reactions]
    sub = system.subsystem(reactions)
    sub_batch = batch.restrict(reactions) if batch is not None else None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = lma_fit(data, sub, config, batch=sub_batch)
    except QrlmaError as e:
        logger.debug(f"Model {labels} failed: {e}")
        return ModelRecord(
            reactions=reactions,
            labels=labels,
            bic=float("inf"),
            objective=float("inf"),
            converged=False,
            non_identifiable=True,
            message=str(e),
        )
    value = bic(fit, data) if fit.converged else float("inf")
    flagged = fit.stderr is None or not all(np.isfinite(fit.stderr))
    return ModelRecord(
        reactions=reactions,
        labels=labels,
        bic=value,
        objective=fit.objective,
        converged=fit.converged,
        theta_hat=fit.theta_hat,
        non_identifiable=flagged and config.compute_stderr,
        message=fit.message,
    )


def _record_remote(
    reactions: List[int], system: ReactionSystem, data: ObservationSet, config: FitConfig
) -> ModelRecord:
    return _record(reactions, system, data, config, None)


class _Evaluator:
    """Fits reaction subsets once each, fanning a batch of subsets out to workers."""

    def __init__(
        self, data: ObservationSet, library: CandidateLibrary, config: SelectionConfig
    ):
        self.data = data
        self.system = library.full_system
        self.config = config
        self.cache: Dict[FrozenSet[int], ModelRecord] = {}
        self.order: List[FrozenSet[int]] = []
        self.batch = TransitionBatch(self.system, data) if config.workers == 1 else None

    def __call__(self, subsets: Iterable[Iterable[int]]) -> List[ModelRecord]:
        keys = [frozenset(s) for s in subsets]
        todo = []
        for k in keys:
            if k not in self.cache and k not in todo:
                todo.append(k)
        if todo:
            if self.batch is not None:
                fn = partial(
                    _record,
                    system=self.system,
                    data=self.data,
                    config=self.config.fit,
                    batch=self.batch,
                )
            else:
                fn = partial(
                    _record_remote, system=self.system, data=self.data, config=self.config.fit
                )
            results = parallel_map(
                fn,
                [sorted(k) for k in todo],
                workers=1 if self.batch is not None else self.config.workers,
                desc="fit",
                progress=self.config.progress,
            )
            for k, rec in zip(todo, results):
                self.cache[k] = rec
                self.order.append(k)
        return [self.cache[k] for k in keys]

    def evaluated(self) -> List[ModelRecord]:
        return [self.cache[k] for k in self.order]


def _best(records: List[ModelRecord]) -> ModelRecord:
    return min(records, key=lambda r: r.sort_key())


def _with_move(record: ModelRecord, move: str) -> ModelRecord:
    return record.model_copy(update={"move": move})


def _neighbours(
    members: FrozenSet[int], free: List[int], labels: List[str]
) -> List[Tuple[str, FrozenSet[int]]]:
    """Add, remove and swap moves over the free reactions."""
    inside = [j for j in free if j in members]
    outside = [j for j in free if j not in members]
    moves = [(f"add {labels[j]}", members | {j}) for j in outside]
    if len(members) > 1:
        moves += [(f"remove {labels[j]}", members - {j}) for j in inside]
    moves += [
        (f"swap {labels[i]} for {labels[j]}", (members - {i}) | {j})
        for i in inside
        for j in outside
    ]
    return moves


def _descend(
    current: ModelRecord,
    evaluate: _Evaluator,
    free: List[int],
    labels: List[str],
    steps: List[ModelRecord],
) -> ModelRecord:
    """Best-improvement moves until no neighbour lowers the BIC."""
    while True:
        moves = _neighbours(frozenset(current.reactions), free, labels)
        if not moves:
            return current
        records = evaluate([m for _, m in moves])
        candidate, name = min(zip(records, [n for n, _ in moves]), key=lambda x: x[0].sort_key())
        if not candidate.bic < current.bic:
            return current
        current = candidate
        steps.append(_with_move(current, name))
        logger.debug(f"{name}: BIC={current.bic:.6g}")


def stepwise_search(
    data: ObservationSet,
    library: CandidateLibrary,
    config: Optional[SelectionConfig] = None,
) -> SelectionTrace:
    """Greedy add/remove/swap search on BIC.

    With ``first_minimum`` the search stops at the first model none of whose
    neighbours improves the BIC. With ``full_sweep`` it then adds reactions one at a
    time up to the saturated model, and descends again from the best model seen
    until that model is itself a local minimum.
    """
    config = config or SelectionConfig()
    system = library.full_system
    evaluate = _Evaluator(data, library, config)
    fixed = set(library.fixed_reactions)
    free = library.free_reactions
    labels = system.reaction_labels

    if free:
        starts = evaluate([fixed | {j} for j in free])
    else:
        starts = evaluate([fixed])
    current = _best(starts)
    steps = [_with_move(current, "start")]
    logger.info(f"Start model {current.labels} BIC={current.bic:.6g}")
    current = _descend(current, evaluate, free, labels, steps)

    if config.stopping == "full_sweep":
        logger.debug("Local minimum reached, sweeping to the saturated model")
        sweep = current
        while True:
            members = set(sweep.reactions)
            additions = [(f"add {labels[j]}", members | {j}) for j in free if j not in members]
            if not additions:
                break
            records = evaluate([m for _, m in additions])
            sweep, name = min(
                zip(records, [n for n, _ in additions]), key=lambda x: x[0].sort_key()
            )
            steps.append(_with_move(sweep, name))

        while True:
            incumbent = _best(evaluate.evaluated())
            if incumbent.reactions == current.reactions:
                break
            logger.debug(f"Restarting descent from {incumbent.labels}")
            steps.append(_with_move(incumbent, "restart"))
            current = _descend(incumbent, evaluate, free, labels, steps)

    evaluated = evaluate.evaluated()
    best = _best(evaluated)
    logger.info(f"Best model {best.labels} BIC={best.bic:.6g} ({len(evaluated)} models fitted)")
    return SelectionTrace(
        reaction_labels=list(labels),
        stopping=config.stopping,
        bic_convention=BIC_CONVENTION,
        steps=steps,
        evaluated=evaluated,
        best_model=best,
    )


def exhaustive_search(
    data: ObservationSet,
    library: CandidateLibrary,
    config: Optional[SelectionConfig] = None,
) -> SelectionTrace:
    """Every subset of the free reactions (joined with the fixed ones)."""
    config = config or SelectionConfig()
    free = library.free_reactions
    if len(free) > EXHAUSTIVE_LIMIT:
        raise InvalidInputError(
            f"Exhaustive search is limited to {EXHAUSTIVE_LIMIT} free reactions, got {len(free)}"
        )
    fixed = set(library.fixed_reactions)
    subsets = [
        fixed | set(combo)
        for k in range(0 if fixed else 1, len(free) + 1)
        for combo in itertools.combinations(free, k)
    ]
    evaluate = _Evaluator(data, library, config)
    evaluate(subsets)
    evaluated = evaluate.evaluated()
    return SelectionTrace(
        reaction_labels=list(library.full_system.reaction_labels),
        stopping="exhaustive",
        bic_convention=BIC_CONVENTION,
        evaluated=evaluated,
        best_model=_best(evaluated),
    )


def bic_weights(trace: SelectionTrace) -> np.ndarray:
    """exp(-dBIC/2) normalized over the evaluated models."""
    if not trace.evaluated:
        raise InvalidInputError("Trace has no models")
    values = np.array([r.bic for r in trace.evaluated], dtype=float)
    finite = np.isfinite(values)
    if not np.any(finite):
        return np.full(values.shape, 1.0 / values.size)
    raw = np.zeros_like(values)
    raw[finite] = np.exp(-0.5 * (values[finite] - values[finite].min()))
    return raw / raw.sum()


def reaction_relevance(trace: SelectionTrace) -> np.ndarray:
    """Per library reaction, the summed weight of the models that contain it."""
    weights = bic_weights(trace)
    out = np.zeros(len(trace.reaction_labels))
    for w, rec in zip(weights, trace.evaluated):
        out[rec.reactions] += w
    return np.clip(out, 0.0, 1.0)
