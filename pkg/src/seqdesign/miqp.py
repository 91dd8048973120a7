"""Exact minimization of the ISL over a free subset of sequence-set entries.

A subproblem fixes every entry of X except a free subset S and decomposes
each affected correlation value into

    value_t(s) = const_t + sum_a lin[t, a] * s_a + sum_p q_p * s_{a_p} * s_{b_p}

where s are the free +-1 variables. Products of two free variables are the
auxiliaries carrying the four standard linking inequalities (z <= b - a + 1,
z <= a - b + 1, z >= -1 - a - b, z >= -1 + a + b), which pin z = a * b at
every binary point. The objective is obj_const + sum_t value_t(s)^2, an
exact integer for every completion.

Two exact solvers are provided: Gray-code exhaustive search (incremental
table updates, one flip per step) and branch-and-bound with an admissible
lower bound (interval by default, convex relaxation optionally).
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import CorrelationTable, SequenceSet

DEFAULT_EXHAUSTIVE_CAP = 20


class SolverError(RuntimeError):
    """An internal solver invariant failed."""


def glover_link(a: int, b: int) -> int:
    """The unique z satisfying the four product-linking inequalities.

    For a, b in {-1, +1} the upper bounds min(b - a + 1, a - b + 1) and the
    lower bounds max(-1 - a - b, -1 + a + b) coincide, pinning z = a * b.
    """
    if a not in (-1, 1) or b not in (-1, 1):
        raise ValueError(f"arguments must be -1 or +1, got ({a}, {b})")
    hi = min(b - a + 1, a - b + 1)
    lo = max(-1 - a - b, -1 + a + b)
    if lo != hi:
        raise SolverError(f"linking interval [{lo}, {hi}] did not collapse")
    return lo


@dataclass
class MiqpSubproblem:
    """ISL restricted to a free index subset, in decomposed quadratic form.

    Variables are ordered canonically (sorted by (row, col)); `cur` holds
    their values in the backing sequence set. Terms are the correlation
    values that depend on at least one free variable; `obj_const` collects
    every other squared correlation in the ISL index set.
    """

    seqset: SequenceSet
    table: CorrelationTable
    free: list[tuple[int, int]]
    cur: np.ndarray  # (n,) current +-1 values
    term_pair: np.ndarray  # (T,) pair row in the table
    term_shift: np.ndarray  # (T,)
    const: np.ndarray  # (T,) int64
    lin: np.ndarray  # (T, n) int64
    quad_t: np.ndarray  # (Q,) term index
    quad_a: np.ndarray  # (Q,) first variable (a < b)
    quad_b: np.ndarray  # (Q,)
    quad_q: np.ndarray  # (Q,) coefficient
    obj_const: int

    @property
    def n(self) -> int:
        return len(self.free)

    @property
    def num_terms(self) -> int:
        return len(self.const)

    @property
    def num_aux(self) -> int:
        return len(self.quad_t)

    def term_values(self, s: np.ndarray) -> np.ndarray:
        """value_t at a full assignment s (+-1 entries, shape (n,))."""
        v = self.const + self.lin @ s
        if len(self.quad_t):
            np.add.at(v, self.quad_t, self.quad_q * s[self.quad_a] * s[self.quad_b])
        return v

    def objective(self, s: np.ndarray) -> int:
        """Exact ISL of the sequence set with the free entries set to s."""
        v = self.term_values(np.asarray(s, dtype=np.int64))
        return self.obj_const + int(np.dot(v, v))

    def objective_batch(self, S: np.ndarray) -> np.ndarray:
        """Objectives for a (B, n) batch of assignments."""
        S = np.asarray(S, dtype=np.int64)
        V = self.const[None, :] + S @ self.lin.T
        if len(self.quad_t):
            prods = self.quad_q[None, :] * S[:, self.quad_a] * S[:, self.quad_b]
            scatter = np.zeros((len(self.quad_t), self.num_terms), dtype=np.int64)
            scatter[np.arange(len(self.quad_t)), self.quad_t] = 1
            V = V + prods @ scatter
        return self.obj_const + np.sum(V * V, axis=1)

    def assignment_encoding(self, s: np.ndarray) -> int:
        """Bits of s in variable order, -1 -> 0, +1 -> 1, variable 0 most significant."""
        code = 0
        for v in s:
            code = (code << 1) | (1 if v > 0 else 0)
        return code

    def dump_text(self) -> str:
        """Readable model listing (objective terms and linking constraints)."""
        lines = [
            f"subproblem over {self.n} free variables, "
            f"{self.num_terms} terms, {self.num_aux} auxiliaries",
            f"objective constant: {self.obj_const}",
            "variables:",
        ]
        for a, (m, c) in enumerate(self.free):
            lines.append(f"  s{a} = X[{m},{c}] (current {int(self.cur[a]):+d})")
        lines.append("terms (objective adds value^2 per term):")
        for t in range(self.num_terms):
            parts = [str(int(self.const[t]))]
            for a in range(self.n):
                co = int(self.lin[t, a])
                if co:
                    parts.append(f"{co:+d}*s{a}")
            for p in range(self.num_aux):
                if self.quad_t[p] == t:
                    parts.append(
                        f"{int(self.quad_q[p]):+d}*z(s{int(self.quad_a[p])},"
                        f"s{int(self.quad_b[p])})"
                    )
            lines.append(
                f"  pair_row={int(self.term_pair[t])} shift={int(self.term_shift[t])}: "
                + " ".join(parts)
            )
        lines.append(
            "each z(a,b) carries: z<=b-a+1, z<=a-b+1, z>=-1-a-b, z>=-1+a+b"
        )
        return "\n".join(lines)


def build_subproblem(
    seqset: SequenceSet, table: CorrelationTable, subset: Sequence[tuple[int, int]]
) -> MiqpSubproblem:
    """Decompose the ISL over the free subset; exact for every completion."""
    if len(subset) == 0:
        raise ValueError("free subset must be nonempty")
    free = sorted((int(m), int(c)) for m, c in subset)
    if len(set(free)) != len(free):
        raise ValueError("duplicate indices in free subset")
    L, K = seqset.L, seqset.K
    for m, c in free:
        if not (0 <= m < L and 0 <= c < K):
            raise ValueError(f"free index out of range: ({m}, {c})")

    X = seqset.entries
    n = len(free)
    cur = np.array([X[m, c] for m, c in free], dtype=np.int64)
    var_at = {pos: a for a, pos in enumerate(free)}
    cols = sorted({c for _, c in free})
    col_vars: dict[int, list[int]] = {c: [] for c in cols}
    for a, (m, c) in enumerate(free):
        col_vars[c].append(a)

    colset = set(cols)
    pairs = [
        (i, j) for i in range(K) for j in range(i, K) if i in colset or j in colset
    ]

    blocks_const = []
    blocks_lin = []
    blocks_pair = []
    blocks_shift = []
    quads: dict[tuple[int, int, int], int] = {}  # (term_row, a, b) -> coeff
    term_base = 0
    affected_sq = 0  # sum of current squared values over included affected terms

    for i, j in pairs:
        p = table.pair_index(i, j)
        row = table.values[p]
        const_v = row.astype(np.int64).copy()
        lin_v = np.zeros((L, n), dtype=np.int64)
        for a in col_vars.get(i, []):
            m_a = free[a][0]
            vec = np.roll(X[:, j], -m_a)  # X[(m_a + k) % L, j]
            lin_v[:, a] += vec
            const_v -= cur[a] * vec
        for a in col_vars.get(j, []):
            m_a = free[a][0]
            vec = np.roll(X[::-1, i], m_a + 1)  # X[(m_a - k) % L, i]
            lin_v[:, a] += vec
            const_v -= cur[a] * vec
        # fix up positions where both factors are free: the linear pass added
        # the partner's current value; replace with a product auxiliary
        block_quads: dict[tuple[int, int, int], int] = {}  # (shift, a, b) -> q
        for a in col_vars.get(i, []):
            m_a = free[a][0]
            for b in col_vars.get(j, []):
                if b == a:
                    continue
                m_b = free[b][0]
                k = (m_b - m_a) % L
                lin_v[k, a] -= cur[b]
                lin_v[k, b] -= cur[a]
                const_v[k] += cur[a] * cur[b]
                key = (k, min(a, b), max(a, b))
                block_quads[key] = block_quads.get(key, 0) + 1
        keep = np.ones(L, dtype=bool)
        drop = 0
        if i == j:
            keep[0] = False  # zero-shift autocorrelation is excluded from the ISL
            drop = 1
        affected_sq += int(np.dot(row[keep], row[keep]))
        blocks_const.append(const_v[keep])
        blocks_lin.append(lin_v[keep])
        blocks_pair.append(np.full(int(keep.sum()), p, dtype=np.int64))
        blocks_shift.append(np.arange(L)[keep])
        for (k, a, b), qv in block_quads.items():
            if i == j and k == 0:
                # distinct free variables in one column occupy distinct rows,
                # so no product can land on the excluded zero-shift term
                raise SolverError("product auxiliary landed on an excluded term")
            quads[(term_base + k - drop, a, b)] = qv
        term_base += L - drop

    const = np.concatenate(blocks_const)
    lin = np.vstack(blocks_lin)
    term_pair = np.concatenate(blocks_pair)
    term_shift = np.concatenate(blocks_shift)

    quad_t = np.array([k[0] for k in quads], dtype=np.int64)
    quad_a = np.array([k[1] for k in quads], dtype=np.int64)
    quad_b = np.array([k[2] for k in quads], dtype=np.int64)
    quad_q = np.array(list(quads.values()), dtype=np.int64)

    # fold terms with no remaining variable dependence into the constant
    depends = np.any(lin != 0, axis=1)
    if len(quad_t):
        depends[quad_t] = True
    if not np.all(depends):
        folded = const[~depends]
        fold_sq = int(np.dot(folded, folded))
        keep_idx = np.flatnonzero(depends)
        remap = -np.ones(len(const), dtype=np.int64)
        remap[keep_idx] = np.arange(len(keep_idx))
        const = const[keep_idx]
        lin = lin[keep_idx]
        term_pair = term_pair[keep_idx]
        term_shift = term_shift[keep_idx]
        if len(quad_t):
            quad_t = remap[quad_t]
    else:
        fold_sq = 0

    obj_const = table.isl() - affected_sq + fold_sq

    return MiqpSubproblem(
        seqset=seqset,
        table=table,
        free=free,
        cur=cur,
        term_pair=term_pair,
        term_shift=term_shift,
        const=const,
        lin=lin,
        quad_t=quad_t,
        quad_a=quad_a,
        quad_b=quad_b,
        quad_q=quad_q,
        obj_const=obj_const,
    )


# --- lower bounds -----------------------------------------------------------


def lower_bound_interval(sub: MiqpSubproblem, s: np.ndarray) -> int:
    """Admissible bound from per-term reachable-value intervals.

    `s` holds the partial assignment: +-1 where assigned, 0 where free. Each
    term's interval is its assigned contribution plus or minus the magnitude
    sum of the free-variable coefficients (with half-assigned products folded
    into the partner's coefficient) and the undetermined product auxiliaries.
    Per-term minimum of value^2 over the interval, summed, never exceeds the
    true minimum of the sum.
    """
    s = np.asarray(s, dtype=np.int64)
    center = sub.const + sub.lin @ s
    free_mask = s == 0
    eff = sub.lin * free_mask[None, :]
    slack = np.zeros(sub.num_terms, dtype=np.int64)
    if len(sub.quad_t):
        sa = s[sub.quad_a]
        sb = s[sub.quad_b]
        both = (sa != 0) & (sb != 0)
        if np.any(both):
            np.add.at(
                center, sub.quad_t[both], sub.quad_q[both] * sa[both] * sb[both]
            )
        half_a = (sa != 0) & (sb == 0)  # product acts linearly on b
        half_b = (sb != 0) & (sa == 0)
        if np.any(half_a) or np.any(half_b):
            eff = eff.copy()
            if np.any(half_a):
                np.add.at(
                    eff,
                    (sub.quad_t[half_a], sub.quad_b[half_a]),
                    sub.quad_q[half_a] * sa[half_a],
                )
            if np.any(half_b):
                np.add.at(
                    eff,
                    (sub.quad_t[half_b], sub.quad_a[half_b]),
                    sub.quad_q[half_b] * sb[half_b],
                )
        none = (sa == 0) & (sb == 0)
        if np.any(none):
            np.add.at(slack, sub.quad_t[none], np.abs(sub.quad_q[none]))
    radius = np.abs(eff) @ free_mask.astype(np.int64) + slack
    lo = center - radius
    hi = center + radius
    term_min = np.where((lo <= 0) & (hi >= 0), 0, np.minimum(lo * lo, hi * hi))
    return sub.obj_const + int(term_min.sum())


_CVXOPT_OPTIONS = {
    "show_progress": False,
    "abstol": 1e-8,
    "reltol": 1e-7,
    "feastol": 1e-8,
    "maxiters": 200,
}


def lower_bound_relaxation(
    sub: MiqpSubproblem, s: np.ndarray, eps_rel: float = 1e-6
) -> tuple[int, bool]:
    """Admissible bound from the convex relaxation (free vars in [-1, 1]).

    Returns (bound, fell_back). Auxiliaries with an assigned endpoint are
    substituted out (the linking constraints pin them); the remaining QP is
    solved with cvxopt and the value is rounded down through an eps margin,
    so solver tolerance cannot push the bound above the true minimum. On
    solver failure the interval bound is returned with fell_back=True.
    """
    s = np.asarray(s, dtype=np.int64)
    free_idx = np.flatnonzero(s == 0)
    nf = len(free_idx)
    center = sub.const + sub.lin @ s
    quad_items = []  # (term, fa, fb, coeff) over free-free products
    if len(sub.quad_t):
        sa = s[sub.quad_a]
        sb = s[sub.quad_b]
        both = (sa != 0) & (sb != 0)
        if np.any(both):
            center = center.copy()
            np.add.at(
                center, sub.quad_t[both], sub.quad_q[both] * sa[both] * sb[both]
            )
    if nf == 0:
        return sub.obj_const + int(np.dot(center, center)), False

    pos_of = {int(v): f for f, v in enumerate(free_idx)}
    lin_f = sub.lin[:, free_idx].astype(np.float64)
    if len(sub.quad_t):
        sa = s[sub.quad_a]
        sb = s[sub.quad_b]
        for p in range(len(sub.quad_t)):
            a, b, q, t = (
                int(sub.quad_a[p]),
                int(sub.quad_b[p]),
                int(sub.quad_q[p]),
                int(sub.quad_t[p]),
            )
            if sa[p] != 0 and sb[p] != 0:
                continue
            if sa[p] != 0:  # z pinned to sa * x_b
                lin_f[t, pos_of[b]] += q * int(sa[p])
            elif sb[p] != 0:
                lin_f[t, pos_of[a]] += q * int(sb[p])
            else:
                quad_items.append((t, pos_of[a], pos_of[b], q))

    nz = len(quad_items)
    T = sub.num_terms
    A = np.zeros((T, nf + nz), dtype=np.float64)
    A[:, :nf] = lin_f
    for col, (t, fa, fb, q) in enumerate(quad_items):
        A[t, nf + col] += q
    b = center.astype(np.float64)

    # constraints G u <= h: box on x, four linking rows per z
    rows = []
    rhs = []
    for f in range(nf):
        e = np.zeros(nf + nz)
        e[f] = 1.0
        rows.append(e.copy())
        rhs.append(1.0)
        e[f] = -1.0
        rows.append(e)
        rhs.append(1.0)
    for col, (t, fa, fb, q) in enumerate(quad_items):
        for za, xa, xb in ((1, 1, -1), (1, -1, 1), (-1, -1, -1), (-1, 1, 1)):
            e = np.zeros(nf + nz)
            e[nf + col] = za
            e[fa] += xa
            e[fb] += xb
            rows.append(e)
            rhs.append(1.0)

    import cvxopt

    P = cvxopt.matrix(2.0 * (A.T @ A))
    q_vec = cvxopt.matrix(2.0 * (A.T @ b))
    G = cvxopt.matrix(np.array(rows))
    h = cvxopt.matrix(np.array(rhs))
    try:
        sol = cvxopt.solvers.qp(P, q_vec, G, h, options=_CVXOPT_OPTIONS)
    except (ValueError, ArithmeticError):
        return lower_bound_interval(sub, s), True
    if sol["status"] != "optimal":
        return lower_bound_interval(sub, s), True
    value = float(sol["primal objective"]) + float(np.dot(b, b)) + sub.obj_const
    eps = max(eps_rel * abs(value), 1e-7)
    bound = int(np.ceil(value - eps))
    return max(bound, 0), False


# --- solvers ----------------------------------------------------------------


@dataclass
class SolveResult:
    assignment: np.ndarray  # (n,) +-1 values in subproblem variable order
    objective: int
    status: str  # "optimal" or "timeout"
    nodes: int
    gap: int = 0
    bound_fallbacks: int = 0


@dataclass
class BnbConfig:
    bound: str = "interval"  # or "relaxation"
    node_cap: int | None = None
    time_cap_s: float | None = None
    open_list_cap: int = 100_000
    audit: Callable[[np.ndarray, int, int], None] | None = None  # (partial, depth, bound)


def solve_exhaustive(
    sub: MiqpSubproblem, cap: int = DEFAULT_EXHAUSTIVE_CAP
) -> SolveResult:
    """Global minimum over all 2^n completions by Gray-code enumeration.

    Walks single-flip neighbors on a private copy of the correlation table,
    so each step costs one incremental update. Ties go to the lowest
    assignment encoding (-1 before +1, variable order).
    """
    n = sub.n
    if n > cap:
        raise ValueError(f"|S| = {n} exceeds exhaustive cap {cap}")
    table = sub.table.copy()
    X = table.seqset.entries
    s = sub.cur.copy()
    enc = sub.assignment_encoding(s)
    bit_of = [1 << (n - 1 - a) for a in range(n)]
    best_obj = table.isl()
    best_enc = enc
    best_s = s.copy()
    for step in range(1, 1 << n):
        a = (step & -step).bit_length() - 1  # Gray transition: flip variable a
        m, c = sub.free[a]
        table.apply_flips([(m, c, -int(s[a]))])
        s[a] = -s[a]
        enc ^= bit_of[a]
        obj = table.isl()
        if obj < best_obj or (obj == best_obj and enc < best_enc):
            best_obj = obj
            best_enc = enc
            best_s = s.copy()
    return SolveResult(
        assignment=best_s, objective=best_obj, status="optimal", nodes=1 << n
    )


def _bound_fn(sub: MiqpSubproblem, config: BnbConfig):
    if config.bound == "interval":
        return lambda s: (lower_bound_interval(sub, s), False)
    if config.bound == "relaxation":
        return lambda s: lower_bound_relaxation(sub, s)
    raise ValueError(f"unknown bound type {config.bound!r}")


def solve_bnb(sub: MiqpSubproblem, config: BnbConfig | None = None) -> SolveResult:
    """Branch-and-bound over the free variables; exact when status is optimal.

    The incumbent starts at the entering assignment, so the result never
    exceeds the entering objective. Nodes are explored best-first by bound
    (depth-first tie-break); when the open list exceeds its cap, new children
    are processed depth-first from a stack until it drains. Pruning uses
    bound >= incumbent, valid because the objective is integral. The reported
    node count is the number of child bound evaluations, at most 2^(n+1).
    """
    config = config or BnbConfig()
    n = sub.n
    bound_of = _bound_fn(sub, config)
    # static branch order: largest total absolute coefficient first
    impact = np.abs(sub.lin).sum(axis=0)
    if len(sub.quad_t):
        np.add.at(impact, sub.quad_a, np.abs(sub.quad_q))
        np.add.at(impact, sub.quad_b, np.abs(sub.quad_q))
    order = np.lexsort((np.arange(n), -impact))

    inc_s = sub.cur.copy()
    inc_obj = sub.objective(inc_s)
    fallbacks = 0
    nodes = 0  # counts child bound evaluations; the root is not charged
    t0 = time.monotonic()

    root = np.zeros(n, dtype=np.int64)
    b0, fb = bound_of(root)
    fallbacks += int(fb)
    if config.audit is not None:
        config.audit(root, 0, b0)

    heap: list[tuple[int, int, int, np.ndarray]] = []  # (bound, -depth, seq, s)
    stack: list[tuple[int, int, np.ndarray]] = []  # (bound, depth, s)
    seq = 0
    if b0 < inc_obj:
        heapq.heappush(heap, (b0, 0, seq, root))
        seq += 1

    status = "optimal"
    while heap or stack:
        if config.node_cap is not None and nodes >= config.node_cap:
            status = "timeout"
            break
        if config.time_cap_s is not None and time.monotonic() - t0 > config.time_cap_s:
            status = "timeout"
            break
        if stack:
            bound, depth, s = stack.pop()
        else:
            bound, negd, _, s = heapq.heappop(heap)
            depth = -negd
        if bound >= inc_obj:
            continue
        if depth == n:
            inc_obj = bound  # degenerate interval: bound is the exact objective
            inc_s = s
            continue
        var = int(order[depth])
        for val in (int(sub.cur[var]), -int(sub.cur[var])):
            child = s.copy()
            child[var] = val
            cb, fb = bound_of(child)
            fallbacks += int(fb)
            nodes += 1
            if config.audit is not None:
                config.audit(child, depth + 1, cb)
            if cb >= inc_obj:
                continue
            if len(heap) < config.open_list_cap:
                heapq.heappush(heap, (cb, -(depth + 1), seq, child))
                seq += 1
            else:
                stack.append((cb, depth + 1, child))

    gap = 0
    if status == "timeout":
        open_bounds = [b for b, _, _, _ in heap[:1]] + [b for b, _, _ in stack]
        best_open = min(open_bounds) if open_bounds else inc_obj
        gap = max(inc_obj - best_open, 0)
    # incumbent may still have unassigned slots if it is the entering point
    result = inc_s.copy()
    free_slots = result == 0
    if np.any(free_slots):
        result[free_slots] = sub.cur[free_slots]
    return SolveResult(
        assignment=result,
        objective=inc_obj,
        status=status,
        nodes=nodes,
        gap=gap,
        bound_fallbacks=fallbacks,
    )


@dataclass
class SolverConfig:
    """Dispatch policy: exhaustive below the threshold, branch-and-bound above."""

    solver: str = "auto"  # auto | exhaustive | bnb
    exhaustive_threshold: int = 16
    exhaustive_cap: int = DEFAULT_EXHAUSTIVE_CAP
    bnb: BnbConfig = field(default_factory=BnbConfig)


def solve_subproblem(sub: MiqpSubproblem, config: SolverConfig | None = None) -> SolveResult:
    config = config or SolverConfig()
    if config.solver == "exhaustive":
        return solve_exhaustive(sub, cap=config.exhaustive_cap)
    if config.solver == "bnb":
        return solve_bnb(sub, config.bnb)
    if config.solver != "auto":
        raise ValueError(f"unknown solver {config.solver!r}")
    if sub.n <= config.exhaustive_threshold:
        return solve_exhaustive(sub, cap=config.exhaustive_cap)
    return solve_bnb(sub, config.bnb)
