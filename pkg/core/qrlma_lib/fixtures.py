"""Built-in reaction systems and experiment presets."""
import itertools
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from qrlma_lib.error import DimensionError, PresetNotFoundError
from qrlma_lib.model_select import CandidateLibrary
from qrlma_lib.reaction import ReactionSystem

# (label, reactants, products, rate) over species A, B, C
_LIBRARY_ABC: List[Tuple[str, Tuple[int, int, int], Tuple[int, int, int], float]] = [
    ("R1", (2, 0, 0), (0, 2, 0), 0.2),
    ("R2", (1, 1, 0), (0, 0, 3), 0.1),
    ("R3", (0, 0, 2), (2, 0, 0), 0.2),
    ("R4", (2, 0, 0), (0, 0, 0), 0.01),
    ("R5", (0, 0, 1), (0, 0, 0), 0.02),
    ("R6", (0, 0, 2), (0, 0, 0), 0.03),
    ("R7", (2, 0, 0), (0, 3, 0), 0.1),
    ("R8", (0, 0, 1), (0, 1, 0), 0.06),
    ("R9", (0, 0, 1), (2, 0, 0), 0.05),
    ("R10", (1, 0, 0), (0, 0, 1), 0.1),
    ("R11", (0, 1, 1), (1, 0, 0), 0.09),
    ("R12", (0, 1, 0), (2, 0, 1), 0.08),
    ("R13", (0, 0, 0), (1, 0, 0), 50.0),
    ("R14", (0, 0, 0), (0, 1, 0), 50.0),
    ("R15", (0, 0, 0), (0, 0, 1), 50.0),
]

CYCLIC3_THETA = (0.2, 0.1, 0.2)
CYCLIC3_STIFF_THETA = (2e-6, 1e-7, 2e-1)
KEEP_EVERY_GRID = (10, 30, 50, 70, 100)
T_GRID = (20, 40, 60, 80, 100)
HEMATOPOIESIS_TIMES = (0.0, 0.08, 0.11, 0.14, 0.17)


class Preset(BaseModel):
    """A reaction system with its generating rates, start state and study protocol."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    description: str = ""
    system: ReactionSystem
    theta_true: List[float]
    y0: List[float]
    T: int = 20
    keep_every: int = 1
    keep_every_grid: List[int] = Field(default_factory=lambda: list(KEEP_EVERY_GRID))
    T_grid: List[int] = Field(default_factory=lambda: list(T_GRID))
    n_replicates: int = 1
    n_seeds: int = 100
    times: Optional[List[float]] = None
    fixed_reactions: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self) -> "Preset":
        if len(self.theta_true) != self.system.n_reactions:
            raise DimensionError(
                f"Preset {self.name}: {len(self.theta_true)} rates for "
                f"{self.system.n_reactions} reactions"
            )
        if len(self.y0) != self.system.n_species:
            raise DimensionError(
                f"Preset {self.name}: {len(self.y0)} initial counts for "
                f"{self.system.n_species} species"
            )
        return self

    @property
    def theta(self) -> np.ndarray:
        return np.asarray(self.theta_true, dtype=float)

    @property
    def initial_state(self) -> np.ndarray:
        return np.asarray(self.y0, dtype=float)


def _abc_system(rows: Sequence[int]) -> Tuple[ReactionSystem, List[float]]:
    chosen = [_LIBRARY_ABC[j] for j in rows]
    return (
        ReactionSystem(
            species=["A", "B", "C"],
            reactant_matrix=np.array([c[1] for c in chosen]).T,
            product_matrix=np.array([c[2] for c in chosen]).T,
            reaction_labels=[c[0] for c in chosen],
        ),
        [c[3] for c in chosen],
    )


def cyclic3_system() -> ReactionSystem:
    """2A -> 2B, A + B -> 3C, 2C -> 2A."""
    return _abc_system(range(3))[0]


def cyclic3_library() -> CandidateLibrary:
    """The three cyclic3 reactions followed by six decoys on the same species."""
    return CandidateLibrary(full_system=_abc_system(range(9))[0])


def differentiation_library(
    species: Sequence[str], quadratic_death: bool = False
) -> CandidateLibrary:
    """Birth and death of every cell type plus every ordered differentiation X -> Y."""
    p = len(species)
    K: List[np.ndarray] = []
    S: List[np.ndarray] = []
    labels: List[str] = []

    def add(reactants: np.ndarray, products: np.ndarray, label: str) -> None:
        K.append(reactants)
        S.append(products)
        labels.append(label)

    for i, name in enumerate(species):
        unit = np.eye(p, dtype=np.int64)[i]
        add(unit, 2 * unit, f"birth_{name}")
        if quadratic_death:
            add(2 * unit, unit, f"death_{name}")
        else:
            add(unit, 0 * unit, f"death_{name}")
    for i, k in itertools.permutations(range(p), 2):
        eye = np.eye(p, dtype=np.int64)
        add(eye[i], eye[k], f"{species[i]}->{species[k]}")

    return CandidateLibrary(
        full_system=ReactionSystem(
            species=list(species),
            reactant_matrix=np.array(K).T,
            product_matrix=np.array(S).T,
            reaction_labels=labels,
        )
    )


def _cyclic3() -> Preset:
    return Preset(
        name="cyclic3",
        description="Cyclic 3-species network 2A->2B, A+B->3C, 2C->2A",
        system=cyclic3_system(),
        theta_true=list(CYCLIC3_THETA),
        y0=[10, 20, 10],
    )


def _cyclic3_stiff() -> Preset:
    return Preset(
        name="cyclic3-stiff",
        description="cyclic3 with rates spanning six orders of magnitude",
        system=cyclic3_system(),
        theta_true=list(CYCLIC3_STIFF_THETA),
        y0=[10, 20, 10],
    )


def _cyclic3_study() -> Preset:
    return Preset(
        name="cyclic3-study",
        description="cyclic3 estimator study: one trajectory per seed, T=20",
        system=cyclic3_system(),
        theta_true=list(CYCLIC3_THETA),
        y0=[100, 100, 100],
        T=20,
        keep_every=10,
        n_replicates=1,
        n_seeds=100,
    )


def _scaling_p(blocks: int) -> Callable[[], Preset]:
    def build() -> Preset:
        return Preset(
            name=f"scaling-p{3 * blocks}",
            description=f"cyclic3 repeated {blocks} times, block diagonal",
            system=cyclic3_system().replicate_blocks(blocks),
            theta_true=list(CYCLIC3_THETA) * blocks,
            y0=[100.0] * (3 * blocks),
            keep_every=10,
        )

    return build


def _scaling_r(r: int) -> Callable[[], Preset]:
    def build() -> Preset:
        system, rates = _abc_system(range(r))
        return Preset(
            name=f"scaling-r{r}",
            description=f"First {r} reactions of the 15-reaction A, B, C network",
            system=system,
            theta_true=rates,
            y0=[100, 100, 100],
            keep_every=10,
        )

    return build


def _hematopoiesis() -> Preset:
    species = ["HSC", "PA", "PB", "G", "M", "T", "B", "NK"]
    idx = {s: i for i, s in enumerate(species)}
    reactions = [
        ("lambda", {"HSC": 1}, {"HSC": 2}, 2850.0),
        ("nu_a", {"HSC": 1}, {"PA": 1}, 1400.0),
        ("nu_b", {"HSC": 1}, {"PB": 1}, 700.0),
        ("mu_a", {"PA": 1}, {}, 50.0),
        ("mu_b", {"PB": 1}, {}, 40.0),
        ("nu_1", {"PA": 1}, {"G": 1}, 3600.0),
        ("nu_2", {"PA": 1}, {"M": 1}, 1800.0),
        ("nu_3", {"PB": 1}, {"T": 1}, 1000.0),
        ("nu_4", {"PB": 1}, {"B": 1}, 2000.0),
        ("nu_5", {"PB": 1}, {"NK": 1}, 1200.0),
        ("mu_1", {"G": 1}, {}, 26.0),
        ("mu_2", {"M": 1}, {}, 13.0),
        ("mu_3", {"T": 1}, {}, 11.0),
        ("mu_4", {"B": 1}, {}, 16.0),
        ("mu_5", {"NK": 1}, {}, 9.0),
    ]
    K = np.zeros((len(species), len(reactions)), dtype=np.int64)
    S = np.zeros_like(K)
    for j, (_, reactants, products, _) in enumerate(reactions):
        for name, c in reactants.items():
            K[idx[name], j] = c
        for name, c in products.items():
            S[idx[name], j] = c
    return Preset(
        name="hematopoiesis",
        description="HSC, two progenitors and five mature types with linear hazards",
        system=ReactionSystem(
            species=species,
            reactant_matrix=K,
            product_matrix=S,
            reaction_labels=[r[0] for r in reactions],
        ),
        theta_true=[r[3] for r in reactions],
        y0=[1, 0, 0, 0, 0, 0, 0, 0],
        T=len(HEMATOPOIESIS_TIMES) - 1,
        n_replicates=100,
        times=list(HEMATOPOIESIS_TIMES),
        fixed_reactions=[3, 4, 10, 11, 12, 13, 14],
    )


def _pure_death() -> Preset:
    return Preset(
        name="pure-death",
        description="A -> 0",
        system=ReactionSystem(species=["A"], reactant_matrix=[[1]], product_matrix=[[0]]),
        theta_true=[0.1],
        y0=[100],
        n_replicates=20,
    )


def _birth_death() -> Preset:
    return Preset(
        name="birth-death",
        description="A -> 2A, A -> 0",
        system=ReactionSystem(
            species=["A"], reactant_matrix=[[1, 1]], product_matrix=[[2, 0]]
        ),
        theta_true=[0.5, 0.6],
        y0=[50],
        n_replicates=20,
    )


def _unitary_chain3() -> Preset:
    return Preset(
        name="unitary-chain3",
        description="0 -> A -> B -> C -> 0",
        system=ReactionSystem(
            species=["A", "B", "C"],
            reactant_matrix=[[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
            product_matrix=[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]],
        ),
        theta_true=[5.0, 0.3, 0.2, 0.1],
        y0=[10, 5, 2],
        n_replicates=20,
    )


_PRESETS: Dict[str, Callable[[], Preset]] = {
    "cyclic3": _cyclic3,
    "cyclic3-stiff": _cyclic3_stiff,
    "cyclic3-study": _cyclic3_study,
    **{f"scaling-p{3 * n}": _scaling_p(n) for n in (1, 2, 3)},
    **{f"scaling-r{r}": _scaling_r(r) for r in range(3, len(_LIBRARY_ABC) + 1)},
    "hematopoiesis": _hematopoiesis,
    "pure-death": _pure_death,
    "birth-death": _birth_death,
    "unitary-chain3": _unitary_chain3,
}


def list_presets() -> List[str]:
    return list(_PRESETS)


def load_preset(name: str) -> Preset:
    try:
        return _PRESETS[name]()
    except KeyError:
        raise PresetNotFoundError(name, list_presets()) from None
