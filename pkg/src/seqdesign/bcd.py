"""Coordinate-descent outer loop: single-entry sweeps and block descent.

Each iteration frees a subset S of entries (always containing the cursor
entry (i, j)), solves the restricted ISL minimization exactly, and commits
the result. The row cursor advances every iteration; the column cursor
advances after `stall_col` consecutive non-improving iterations, and the run
stops after `stall_total` consecutive non-improving iterations (defaults L
and L*K). With subset size 1 this is plain single-entry descent, which can
only terminate at a 1-opt local optimum.

The objective trace is non-increasing by construction; the run raises
SolverError if a committed step ever increases it.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import CorrelationTable, SequenceSet
from .miqp import SolverConfig, SolverError, build_subproblem, solve_subproblem


@dataclass
class BcdConfig:
    """Outer-loop parameters; `n_free` is the subset size (1 = single-entry)."""

    n_free: int = 1
    do_bcd: bool | None = None  # default: n_free > 1
    seed: int = 0
    max_iters: int | None = None
    time_budget_s: float | None = None
    stall_col: int | None = None  # default L
    stall_total: int | None = None  # default L * K
    solver: SolverConfig = field(default_factory=SolverConfig)

    def resolved_do_bcd(self) -> bool:
        return self.n_free > 1 if self.do_bcd is None else self.do_bcd


@dataclass
class IterationRecord:
    t: int
    subset: tuple[tuple[int, int], ...]
    isl: int
    nodes: int
    micros: int


@dataclass
class RunTrace:
    records: list[IterationRecord]
    status: str  # converged | max_iters | budget
    seed: int
    isl_initial: int
    isl_final: int

    @property
    def iterations(self) -> int:
        return len(self.records)

    def objectives(self) -> list[int]:
        return [r.isl for r in self.records]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "isl", "subset_size", "nodes", "micros"])
            for r in self.records:
                w.writerow([r.t, r.isl, len(r.subset), r.nodes, r.micros])


def select_subset(
    i: int, j: int, n_free: int, L: int, K: int, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """The free index set for one iteration; always contains (i, j).

    For n_free > 1 the remaining indices are drawn uniformly without
    replacement from the rows of columns j and j' (j' != j uniform at
    random), excluding (i, j) itself. With K = 1 the extra indices come from
    the single column. n_free = 1 consumes no randomness.
    """
    if n_free < 1:
        raise ValueError("subset size must be >= 1")
    if n_free == 1:
        return [(i, j)]
    limit = L if K == 1 else 2 * L
    if n_free > limit:
        raise ValueError(
            f"subset size {n_free} cannot be filled from {limit} candidate entries"
        )
    if K == 1:
        cols = [j]
    else:
        jp = int(rng.integers(K - 1))
        if jp >= j:
            jp += 1
        cols = [j, jp]
    candidates = [(u, v) for v in cols for u in range(L) if (u, v) != (i, j)]
    picks = rng.choice(len(candidates), size=n_free - 1, replace=False)
    return [(i, j)] + [candidates[int(p)] for p in picks]


def is_local_optimum(table: CorrelationTable) -> bool:
    """True iff no single-entry flip strictly decreases the ISL (1-opt)."""
    L, K = table.seqset.L, table.seqset.K
    base = table.isl()
    for c in range(K):
        for m in range(L):
            if table.probe_flip(m, c) < base:
                return False
    return True


def run(x0: SequenceSet, config: BcdConfig | None = None) -> tuple[SequenceSet, RunTrace]:
    """Descend from x0; returns the final set and the per-iteration trace."""
    config = config or BcdConfig()
    L, K = x0.L, x0.K
    n_free = config.n_free
    do_bcd = config.resolved_do_bcd()
    if n_free < 1:
        raise ValueError("n_free must be >= 1")
    if do_bcd and n_free > (L if K == 1 else 2 * L):
        raise ValueError(f"n_free {n_free} too large for L={L}, K={K}")
    stall_col_limit = config.stall_col if config.stall_col is not None else L
    stall_total_limit = (
        config.stall_total if config.stall_total is not None else L * K
    )
    if stall_col_limit < 1 or stall_total_limit < 1:
        raise ValueError("stall limits must be >= 1")

    seqset = x0.copy()
    table = CorrelationTable.build(seqset)
    rng = np.random.default_rng(config.seed)
    f = table.isl()
    isl_initial = f
    i = jcol = 0
    t = 0
    stall = 0
    stall_col = 0
    records: list[IterationRecord] = []
    status = "converged"
    t_start = time.monotonic()

    while True:
        if config.max_iters is not None and t >= config.max_iters:
            status = "max_iters"
            break
        if (
            config.time_budget_s is not None
            and time.monotonic() - t_start > config.time_budget_s
        ):
            status = "budget"
            break
        t += 1
        tick = time.monotonic()
        if do_bcd:
            subset = select_subset(i, jcol, n_free, L, K, rng)
        else:
            subset = [(i, jcol)]
        sub = build_subproblem(seqset, table, subset)
        result = solve_subproblem(sub, config.solver)
        flips = [
            (m, c, int(v))
            for (m, c), v in zip(sub.free, result.assignment)
            if seqset.entries[m, c] != v
        ]
        new_f = table.apply_flips(flips)
        if new_f != result.objective:
            raise SolverError(
                f"committed ISL {new_f} != solver objective {result.objective}"
            )
        if new_f > f:
            raise SolverError(f"objective increased: {f} -> {new_f}")
        improved = new_f < f
        f = new_f
        records.append(
            IterationRecord(
                t=t,
                subset=tuple(sorted(subset)),
                isl=f,
                nodes=result.nodes,
                micros=int((time.monotonic() - tick) * 1e6),
            )
        )
        if improved:
            stall = 0
            stall_col = 0
        else:
            stall += 1
            stall_col += 1
        if stall >= stall_total_limit:
            break
        if stall_col >= stall_col_limit:
            jcol = (jcol + 1) % K
            stall_col = 0
        i = (i + 1) % L

    trace = RunTrace(
        records=records,
        status=status,
        seed=config.seed,
        isl_initial=isl_initial,
        isl_final=f,
    )
    return seqset, trace
