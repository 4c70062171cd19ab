"""Per-run record of the local optima a search visits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_FIELDS = ("fo", "model", "moves", "dist_prev", "dist_ref", "lookups", "perturbed")


@dataclass(eq=False)
class SearchTrace:
    """One entry per local optimum reached, in visiting order.

    ``moves[i]`` is the number of improving moves the descent applied to
    reach optimum i; ``perturbed[i]`` says whether that descent started from
    a perturbed tour (False for the initial descent and for descents that
    open a new smoothing round). Each perturbation episode consists of
    ``strength`` double bridges, each counted as one move, so the move total
    is ``moves.sum() + strength * perturbed.sum()``.

    ``dist_prev`` is the bond distance to the previous optimum (-1 for the
    first), ``dist_ref`` the distance to the reference tour (-1 if none),
    ``lookups`` the evaluation counter (edge-cost lookups) at the event,
    ``times`` seconds since the run started. ``tours`` holds the optima
    themselves when the run kept them.
    """

    n: int
    fo: np.ndarray
    model: np.ndarray
    moves: np.ndarray
    dist_prev: np.ndarray
    dist_ref: np.ndarray
    lookups: np.ndarray
    times: np.ndarray
    perturbed: np.ndarray
    strength: int = 1
    tours: np.ndarray | None = None
    phases: tuple = field(default_factory=tuple)

    def __len__(self) -> int:
        return self.fo.shape[0]

    @property
    def perturbations(self) -> int:
        return int(self.strength * np.count_nonzero(self.perturbed))

    @property
    def move_count(self) -> int:
        return int(self.moves.sum()) + self.perturbations

    @property
    def episodes(self) -> int:
        return int(np.count_nonzero(self.perturbed))

    def same_events(self, other: "SearchTrace") -> bool:
        """Equality of everything except wall-clock times."""
        if len(self) != len(other) or self.strength != other.strength:
            return False
        for name in _FIELDS:
            if not np.array_equal(getattr(self, name), getattr(other, name)):
                return False
        return True
