"""Exhaustive search-space enumeration and Pareto machinery.

Everything here treats objectives as maximized.  A solution ``a`` dominates
``b`` iff it is at least as good in every objective and strictly better in
one.  The exact Pareto set of an instance is found by enumerating all 2^N
bitstrings (N capped to keep "exact" honest) and keeping the non-dominated
ones; solutions whose objective vector duplicates a Pareto point are kept,
since they are distinct solutions in decision space.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .landscape import MNKInstance, bits_to_string, evaluate_batch, string_to_bits

__all__ = [
    "ParetoSet",
    "RankedPopulation",
    "EnumerationCapError",
    "dominates",
    "pareto_mask",
    "enumerate_pareto",
    "nondominated_sort",
    "epsilon_success",
    "save_pareto_json",
    "load_pareto_json",
    "save_pareto_csv",
    "ENUMERATION_CAP",
]

ENUMERATION_CAP = 24
_CHUNK = 1 << 16


class EnumerationCapError(ValueError):
    """Raised when an instance is too large for exhaustive enumeration."""


def dominates(a: np.ndarray, b: np.ndarray) -> bool:
    """True iff ``a`` Pareto-dominates ``b`` under maximization."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a >= b) and np.any(a > b))


def pareto_mask(objectives: np.ndarray) -> np.ndarray:
    """Boolean mask of the non-dominated rows of an objective matrix.

    Rows equal to a non-dominated row are kept (duplicates are mutually
    non-dominating).  Scans candidates in decreasing objective-sum order so
    strong points prune the bulk early.
    """
    objs = np.asarray(objectives, dtype=np.float64)
    n = objs.shape[0]
    if n == 0:
        return np.zeros(0, dtype=bool)
    order = np.argsort(-objs.sum(axis=1), kind="stable")
    pts = objs[order]
    alive = np.arange(n)
    i = 0
    while i < len(pts):
        cand = pts[i]
        keep = np.any(pts > cand, axis=1) | np.all(pts == cand, axis=1)
        pts = pts[keep]
        alive = alive[keep]
        i = int(np.count_nonzero(keep[:i])) + 1
    mask = np.zeros(n, dtype=bool)
    mask[order[alive]] = True
    return mask


@dataclass(frozen=True, eq=False)
class ParetoSet:
    """Exact Pareto-optimal solutions of one instance, with objectives.

    ``solutions`` is (npo, N) uint8, ``objectives`` the parallel (npo, M)
    float matrix; rows are sorted lexicographically by bitstring.
    """

    instance_id: str
    solutions: np.ndarray
    objectives: np.ndarray

    def __post_init__(self) -> None:
        solutions = np.ascontiguousarray(self.solutions, dtype=np.uint8)
        objectives = np.ascontiguousarray(self.objectives, dtype=np.float64)
        if solutions.ndim != 2 or objectives.ndim != 2:
            raise ValueError("solutions and objectives must be 2-D")
        if solutions.shape[0] != objectives.shape[0]:
            raise ValueError("solutions and objectives row counts differ")
        solutions.flags.writeable = False
        objectives.flags.writeable = False
        object.__setattr__(self, "solutions", solutions)
        object.__setattr__(self, "objectives", objectives)

    @property
    def size(self) -> int:
        return self.solutions.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParetoSet):
            return NotImplemented
        return (
            self.instance_id == other.instance_id
            and np.array_equal(self.solutions, other.solutions)
            and np.array_equal(self.objectives, other.objectives)
        )


def _bit_matrix(codes: np.ndarray, n_vars: int) -> np.ndarray:
    shifts = np.arange(n_vars - 1, -1, -1, dtype=np.uint32)
    return ((codes[:, None] >> shifts) & 1).astype(np.uint8)


def enumerate_pareto(instance: MNKInstance, cap: int = ENUMERATION_CAP) -> ParetoSet:
    """Exact Pareto set over all 2^N solutions, in lexicographic order.

    Works in chunks: each chunk is evaluated, reduced to its non-dominated
    subset, and merged with the running archive, so the result does not
    depend on chunk boundaries.
    """
    n = instance.n_vars
    if n > cap:
        raise EnumerationCapError(
            f"N={n} exceeds the enumeration cap of {cap}; exact Pareto sets "
            "are only supported for enumerable instances"
        )
    total = 1 << n
    archive_codes = np.empty(0, dtype=np.uint32)
    archive_objs = np.empty((0, instance.m_objectives), dtype=np.float64)
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total), dtype=np.uint32)
        objs = evaluate_batch(instance, _bit_matrix(codes, n))
        local = pareto_mask(objs)
        merged_codes = np.concatenate([archive_codes, codes[local]])
        merged_objs = np.vstack([archive_objs, objs[local]])
        keep = pareto_mask(merged_objs)
        archive_codes = merged_codes[keep]
        archive_objs = merged_objs[keep]
    order = np.argsort(archive_codes, kind="stable")
    return ParetoSet(
        instance_id=instance.id,
        solutions=_bit_matrix(archive_codes[order], n),
        objectives=archive_objs[order],
    )


@dataclass(frozen=True, eq=False)
class RankedPopulation:
    """A population split into Pareto fronts with crowding distances.

    ``rank`` is 1-based (front 1 is non-dominated); ``crowding`` follows the
    usual convention of +inf at each front's per-objective extremes, with
    interior members summing normalized cuboid side lengths.
    """

    objectives: np.ndarray
    rank: np.ndarray
    crowding: np.ndarray
    solutions: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.objectives.shape[0]

    @property
    def n_fronts(self) -> int:
        return int(self.rank.max())

    def front(self, index: int) -> np.ndarray:
        """Member indices of front ``index`` (1-based)."""
        return np.where(self.rank == index)[0]


def _domination_matrix(objs: np.ndarray) -> np.ndarray:
    n = objs.shape[0]
    dom = np.empty((n, n), dtype=bool)
    step = max(1, (1 << 22) // max(1, n * objs.shape[1]))
    for start in range(0, n, step):
        rows = objs[start : start + step][:, None, :]
        ge = (rows >= objs[None, :, :]).all(axis=2)
        gt = (rows > objs[None, :, :]).any(axis=2)
        dom[start : start + step] = ge & gt
    return dom


def _crowding_distances(front_objs: np.ndarray) -> np.ndarray:
    size = front_objs.shape[0]
    if size <= 2:
        return np.full(size, np.inf)
    crowd = np.zeros(size, dtype=np.float64)
    for m in range(front_objs.shape[1]):
        values = front_objs[:, m]
        order = np.argsort(values, kind="stable")
        spread = values[order[-1]] - values[order[0]]
        if spread <= 0.0:
            continue
        crowd[order[0]] = np.inf
        crowd[order[-1]] = np.inf
        crowd[order[1:-1]] += (values[order[2:]] - values[order[:-2]]) / spread
    return crowd


def nondominated_sort(
    objectives: np.ndarray, solutions: np.ndarray | None = None
) -> RankedPopulation:
    """Fast non-dominated sorting with crowding distances.

    Peels fronts by maintaining per-member dominator counts against the
    full pairwise domination matrix.
    """
    objs = np.ascontiguousarray(objectives, dtype=np.float64)
    if objs.ndim != 2 or objs.shape[0] == 0:
        raise ValueError("population must be a non-empty 2-D objective matrix")
    n = objs.shape[0]
    dom = _domination_matrix(objs)
    counts = dom.sum(axis=0).astype(np.int64)
    rank = np.zeros(n, dtype=np.int32)
    crowding = np.zeros(n, dtype=np.float64)
    assigned = np.zeros(n, dtype=bool)
    front_index = 1
    while not assigned.all():
        members = np.where(~assigned & (counts == 0))[0]
        if members.size == 0:
            raise AssertionError("domination counts exhausted with members left")
        rank[members] = front_index
        assigned[members] = True
        counts -= dom[members].sum(axis=0)
        crowding[members] = _crowding_distances(objs[members])
        front_index += 1
    sols = None if solutions is None else np.asarray(solutions)
    return RankedPopulation(objectives=objs, rank=rank, crowding=crowding, solutions=sols)


def epsilon_success(
    candidates: np.ndarray, exact: "ParetoSet | np.ndarray", epsilon: float
) -> bool:
    """True iff the candidate set is a (1+epsilon)-approximation.

    Checks that every exact Pareto objective vector ``p`` has a candidate
    ``c`` with ``p_m <= (1+epsilon)*c_m`` in all objectives.  Covering the
    Pareto set suffices: every feasible point is weakly dominated by some
    Pareto point, so its coverage is implied.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    exact_objs = exact.objectives if isinstance(exact, ParetoSet) else np.asarray(exact)
    cand = np.asarray(candidates, dtype=np.float64)
    if cand.ndim == 1:
        cand = cand.reshape(1, -1) if cand.size else cand.reshape(0, exact_objs.shape[1])
    if cand.ndim != 2:
        raise ValueError("candidates must be a matrix of objective vectors")
    if exact_objs.shape[0] == 0:
        return True
    if cand.shape[0] == 0:
        return False
    if cand.shape[1] != exact_objs.shape[1]:
        raise ValueError(
            f"objective counts differ: candidates have {cand.shape[1]}, "
            f"exact set has {exact_objs.shape[1]}"
        )
    scaled = (1.0 + epsilon) * cand
    step = max(1, (1 << 22) // max(1, scaled.shape[0] * scaled.shape[1]))
    for start in range(0, exact_objs.shape[0], step):
        block = exact_objs[start : start + step]
        covered = (block[:, None, :] <= scaled[None, :, :]).all(axis=2).any(axis=1)
        if not covered.all():
            return False
    return True


def save_pareto_json(pareto: ParetoSet, path: str | Path) -> None:
    doc = {
        "format_version": 1,
        "instance_id": pareto.instance_id,
        "n": int(pareto.solutions.shape[1]),
        "m": int(pareto.objectives.shape[1]),
        "solutions": [bits_to_string(row) for row in pareto.solutions],
        "objectives": pareto.objectives.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_pareto_json(path: str | Path) -> ParetoSet:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    solutions = np.array([string_to_bits(s) for s in doc["solutions"]], dtype=np.uint8)
    if solutions.size == 0:
        solutions = solutions.reshape(0, doc["n"])
    return ParetoSet(
        instance_id=doc["instance_id"],
        solutions=solutions,
        objectives=np.array(doc["objectives"], dtype=np.float64).reshape(
            len(doc["objectives"]), doc["m"]
        ),
    )


def save_pareto_csv(pareto: ParetoSet, path: str | Path) -> None:
    """CSV export: one row per solution, columns bitstring, z_1..z_M."""
    m = pareto.objectives.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bitstring"] + [f"z_{i + 1}" for i in range(m)])
        for bits, objs in zip(pareto.solutions, pareto.objectives):
            writer.writerow([bits_to_string(bits)] + [repr(float(v)) for v in objs])
