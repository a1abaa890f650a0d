"""Reaction systems, the combinatorial hazard and its local linearization.

States and rate vectors are plain numpy arrays. Every function accepts a stack of
states with shape (..., p) and broadcasts over the leading axes, which is what the
batched predictors in `forecast` and `uncertainty` rely on.
"""
from typing import Any, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.special import binom, digamma

from qrlma_lib.error import DimensionError, InvalidInputError, NonFiniteInputError


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


class ReactionSystem(BaseModel):
    """Species plus reactant (K) and product (S) stoichiometry, both p x r."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    species: List[str]
    reactant_matrix: np.ndarray
    product_matrix: np.ndarray
    reaction_labels: List[str] = []

    @field_validator("reactant_matrix", "product_matrix", mode="before")
    @classmethod
    def _to_int_matrix(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise DimensionError("Stoichiometry matrices must be 2-dimensional")
        if not np.all(np.isfinite(arr)) or not np.all(arr == np.round(arr)):
            raise InvalidInputError("Stoichiometries must be integers")
        return _readonly(arr.astype(np.int64))

    @model_validator(mode="after")
    def _check_shapes(self) -> "ReactionSystem":
        K, S = self.reactant_matrix, self.product_matrix
        if K.shape != S.shape:
            raise DimensionError(
                f"Reactant matrix {K.shape} and product matrix {S.shape} differ in shape"
            )
        p, r = K.shape
        if p < 1 or r < 1:
            raise DimensionError("A reaction system needs at least one species and one reaction")
        if len(self.species) != p:
            raise DimensionError(
                f"{len(self.species)} species names for {p} stoichiometry rows"
            )
        if len(set(self.species)) != p:
            raise InvalidInputError("Species names must be unique")
        if np.any(K < 0) or np.any(S < 0):
            raise InvalidInputError("Stoichiometries must be nonnegative")
        if not self.reaction_labels:
            object.__setattr__(
                self, "reaction_labels", [f"R{j + 1}" for j in range(r)]
            )
        elif len(self.reaction_labels) != r:
            raise DimensionError(
                f"{len(self.reaction_labels)} reaction labels for {r} reactions"
            )
        return self

    @property
    def n_species(self) -> int:
        return int(self.reactant_matrix.shape[0])

    @property
    def n_reactions(self) -> int:
        return int(self.reactant_matrix.shape[1])

    @property
    def net_matrix(self) -> np.ndarray:
        V = self.product_matrix - self.reactant_matrix
        V.setflags(write=False)
        return V

    @property
    def is_unitary(self) -> bool:
        K = self.reactant_matrix
        return bool(np.all(K <= 1) and np.all(K.sum(axis=0) <= 1))

    def subsystem(self, reactions: Sequence[int]) -> "ReactionSystem":
        idx = list(reactions)
        if not idx:
            raise InvalidInputError("A subsystem needs at least one reaction")
        return ReactionSystem(
            species=list(self.species),
            reactant_matrix=self.reactant_matrix[:, idx],
            product_matrix=self.product_matrix[:, idx],
            reaction_labels=[self.reaction_labels[j] for j in idx],
        )

    def replicate_blocks(self, n: int) -> "ReactionSystem":
        """Block-diagonal copy of the system n times, species suffixed _1 .. _n."""
        eye = np.eye(n, dtype=np.int64)
        return ReactionSystem(
            species=[f"{s}_{i + 1}" for i in range(n) for s in self.species],
            reactant_matrix=np.kron(eye, self.reactant_matrix),
            product_matrix=np.kron(eye, self.product_matrix),
            reaction_labels=[
                f"{label}_{i + 1}" for i in range(n) for label in self.reaction_labels
            ],
        )

    def describe_reaction(self, j: int) -> str:
        def side(column: np.ndarray) -> str:
            terms = [
                (f"{c}{name}" if c > 1 else name)
                for name, c in zip(self.species, column)
                if c > 0
            ]
            return " + ".join(terms) if terms else "0"

        return f"{side(self.reactant_matrix[:, j])} -> {side(self.product_matrix[:, j])}"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ReactionSystem):
            return NotImplemented
        return (
            self.species == other.species
            and self.reaction_labels == other.reaction_labels
            and np.array_equal(self.reactant_matrix, other.reactant_matrix)
            and np.array_equal(self.product_matrix, other.product_matrix)
        )

    __hash__ = None  # type: ignore[assignment]


class LmaOperator(BaseModel):
    """Coefficients (P, b) of the linearized mean ODE m' = P m + b at an anchor."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    P: np.ndarray
    b: np.ndarray
    H: np.ndarray
    kappa: np.ndarray
    anchor_state: np.ndarray
    anchor_theta: np.ndarray

    @property
    def augmented(self) -> np.ndarray:
        """Affine augmentation [[P, b], [0, 0]] of shape (..., p+1, p+1)."""
        return augment(self.P, self.b)


def augment(P: np.ndarray, b: np.ndarray) -> np.ndarray:
    p = P.shape[-1]
    out = np.zeros(P.shape[:-2] + (p + 1, p + 1))
    out[..., :p, :p] = P
    out[..., :p, p] = b
    return out


def check_state(system: ReactionSystem, y: Any) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != system.n_species:
        raise DimensionError(
            f"State has {arr.shape[-1] if arr.ndim else 0} entries, "
            f"system has {system.n_species} species ({', '.join(system.species)})"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError("State contains non-finite counts")
    return arr


def check_theta(system: ReactionSystem, theta: Any) -> np.ndarray:
    arr = np.asarray(theta, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != system.n_reactions:
        raise DimensionError(
            f"Rate vector has shape {arr.shape}, system has "
            f"{system.n_reactions} reactions ({', '.join(system.reaction_labels)})"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError("Rate vector contains non-finite entries")
    if np.any(arr < 0):
        raise InvalidInputError("Rates must be nonnegative")
    return arr


def binomial_factors(y: np.ndarray, K: np.ndarray) -> np.ndarray:
    """C(y_l, k_lj) with shape (..., p, r); zero wherever y_l < k_lj."""
    Y = np.broadcast_to(y[..., :, None], y.shape + (K.shape[1],))
    active = Y >= K
    out = np.zeros(Y.shape)
    out[active] = binom(Y[active], np.broadcast_to(K, Y.shape)[active])
    return out


def kappa(system: ReactionSystem, y: Any) -> np.ndarray:
    y = check_state(system, y)
    return binomial_factors(y, system.reactant_matrix).prod(axis=-2)


def hazard(system: ReactionSystem, y: Any, theta: Any) -> np.ndarray:
    theta = check_theta(system, theta)
    return theta * kappa(system, y)


def hazard_jacobian(
    system: ReactionSystem, y: Any, theta: Any
) -> Tuple[np.ndarray, np.ndarray]:
    """Return (Lambda, H), both r x p, with Lambda = diag(theta) H."""
    theta = check_theta(system, theta)
    y = check_state(system, y)
    K = system.reactant_matrix
    kap = binomial_factors(y, K).prod(axis=-2)

    Y = np.broadcast_to(y[..., :, None], y.shape + (K.shape[1],))
    Kb = np.broadcast_to(K, Y.shape)
    active = Y >= Kb
    # psi(y+1) - psi(y-k+1); zero where the binomial is clamped
    dlog = np.zeros(Y.shape)
    dlog[active] = digamma(Y[active] + 1.0) - digamma(Y[active] - Kb[active] + 1.0)
    H = np.swapaxes(kap[..., None, :] * dlog, -1, -2)
    return theta[:, None] * H, H


def lma_coefficients(system: ReactionSystem, y: Any, theta: Any) -> LmaOperator:
    theta = check_theta(system, theta)
    y = check_state(system, y)
    V = system.net_matrix.astype(float)
    _, H = hazard_jacobian(system, y, theta)
    kap = kappa(system, y)
    P = V @ (theta[:, None] * H)
    offset = kap - np.einsum("...jl,...l->...j", H, y)
    b = np.einsum("lj,...j->...l", V, theta * offset)
    return LmaOperator(
        P=P, b=b, H=H, kappa=kap, anchor_state=y.copy(), anchor_theta=theta.copy()
    )


def unitary_coefficients(
    system: ReactionSystem, theta: Any
) -> Tuple[np.ndarray, np.ndarray]:
    """Closed-form (P, b) of a unitary system: P = V diag(theta) K^T, b from sources."""
    if not system.is_unitary:
        raise InvalidInputError("System is not unitary")
    theta = check_theta(system, theta)
    V = system.net_matrix.astype(float)
    K = system.reactant_matrix.astype(float)
    P = V @ (theta[:, None] * K.T)
    sources = (system.reactant_matrix.sum(axis=0) == 0).astype(float)
    return P, V @ (theta * sources)


def theta_generators(
    system: ReactionSystem, H: np.ndarray, kap: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """dA/dtheta_j of the augmented matrix, shape (..., r, p+1, p+1).

    The augmented matrix is linear in theta, A = sum_j theta_j G_j, with each G_j
    built from the anchor quantities alone.
    """
    V = system.net_matrix.astype(float)
    offset = kap - np.einsum("...jl,...l->...j", H, y)
    dP = V.T[:, :, None] * H[..., :, None, :]
    db = V.T * offset[..., :, None]
    return augment(dP, db)
