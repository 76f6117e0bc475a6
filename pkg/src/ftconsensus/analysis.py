"""Feasibility analysis and certificate extraction for consensus sequences.

Three necessary conditions are checked for exact finite-time consensus with
positive-diagonal stochastic updates: the graph must be strongly connected,
it must contain an even-length simple directed cycle, and it must not be a
bare directed cycle. A bidirectional spanning tree is sufficient. Graphs
meeting every necessary condition but lacking such a tree sit in genuinely
open territory, and the verdict says so rather than guessing.
"""

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from gmpy2 import mpq

from .construction import MatrixSequence
from .graph import (
    Graph,
    directed_cycle,
    find_spanning_tree,
    has_even_simple_cycle,
    is_simple_cycle_graph,
    is_strongly_connected,
)
from .ratlinalg import (
    Rational,
    RationalMatrix,
    format_rational,
    has_positive_diagonal,
    is_consistent,
    is_rank_one_stochastic,
    is_stochastic,
    mat_mul,
    mat_vec,
)

_ZERO = mpq(0)
_ONE = mpq(1)


class PreconditionError(ValueError):
    """An analysis operation was handed inputs violating its contract."""


class InternalContractBreach(RuntimeError):
    """A step that is mathematically impossible under the preconditions."""


FEASIBLE = "Feasible"
INFEASIBLE = "Infeasible"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class FeasibilityVerdict:
    """Three-valued feasibility answer plus the findings behind it."""

    status: str
    strongly_connected: bool
    even_simple_cycle: Optional[list]
    bidirectional_spanning_tree: bool
    is_pure_simple_cycle: bool

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "reasons": {
                "strongly_connected": self.strongly_connected,
                "even_simple_cycle": self.even_simple_cycle,
                "bidirectional_spanning_tree": self.bidirectional_spanning_tree,
                "is_pure_simple_cycle": self.is_pure_simple_cycle,
            },
        }


def assess_feasibility(G: Graph, cycle_node_limit: int = 20) -> FeasibilityVerdict:
    """Classify G as Feasible, Infeasible, or Unknown.

    Infeasible when a necessary condition fails (not strongly connected, no
    even simple cycle) or the graph is a bare directed cycle on >= 3 nodes.
    Feasible when a bidirectional spanning tree exists (and trivially for a
    single node, where the empty sequence already averages). Unknown
    otherwise: adding arcs can only ever move a graph toward Feasible.
    """
    sc = is_strongly_connected(G)
    even = has_even_simple_cycle(G, node_limit=cycle_node_limit)
    tree = find_spanning_tree(G) is not None
    pure = is_simple_cycle_graph(G)
    if G.n == 1:
        status = FEASIBLE
    elif not sc or even is None or pure:
        status = INFEASIBLE
    elif tree:
        status = FEASIBLE
    else:
        status = UNKNOWN
    return FeasibilityVerdict(
        status=status,
        strongly_connected=sc,
        even_simple_cycle=even,
        bidirectional_spanning_tree=tree,
        is_pure_simple_cycle=pure,
    )


def _validate_sequence(G: Graph, seq: MatrixSequence, who: str):
    if seq.n != G.n:
        raise PreconditionError(f"{who}: sequence order {seq.n} vs graph on {G.n} nodes")
    for t, A in enumerate(seq.matrices, start=1):
        if not is_stochastic(A):
            raise PreconditionError(f"{who}: matrix {t} is not stochastic")
        if not has_positive_diagonal(A):
            raise PreconditionError(f"{who}: matrix {t} has a non-positive diagonal entry")
        if not is_consistent(A, G):
            raise PreconditionError(f"{who}: matrix {t} is not consistent with the graph")


def _trajectory(seq: MatrixSequence, x0: Sequence) -> list:
    states = [tuple(mpq(v) for v in x0)]
    for A in seq.matrices:
        states.append(mat_vec(A, states[-1]))
    return states


def _is_constant(x: Sequence) -> bool:
    return all(v == x[0] for v in x)


@dataclass(frozen=True)
class SignWalk:
    """An influence walk whose signs alternate strictly around x*.

    `visited` lists the walked nodes, ending with the first repeat;
    consecutive entries (i_k, i_k+1) are joined by an arc letting i_k+1
    influence i_k. `cycle` is the enclosed simple directed cycle, listed in
    arc direction; its length is even because the signs alternate.
    """

    xstar: Rational
    visited: list
    signs: list
    cycle: list

    def to_dict(self) -> dict:
        return {
            "xstar": format_rational(self.xstar),
            "walk": list(self.visited),
            "cycle": list(self.cycle),
        }


def extract_even_cycle_certificate(
    G: Graph, seq: MatrixSequence, x0: Sequence
) -> Optional[SignWalk]:
    """Pull an even simple cycle out of a consensus-achieving run.

    The sequence must be stochastic/positive-diagonal/consistent and must
    drive x0 to an exactly constant vector. If the state one step before the
    end is already constant the certificate is degenerate and None is
    returned. Otherwise the last matrix must mix both sides of the final
    value x*, and walking "smallest opposite-signed influencer" from any
    off-x* node must close an even cycle.
    """
    _validate_sequence(G, seq, "extract_even_cycle_certificate")
    if len(x0) != G.n:
        raise PreconditionError(
            f"extract_even_cycle_certificate: initial vector of length {len(x0)} "
            f"for {G.n} nodes"
        )
    states = _trajectory(seq, x0)
    final = states[-1]
    if not _is_constant(final):
        raise PreconditionError(
            "extract_even_cycle_certificate: sequence does not reach consensus "
            "from this initial vector"
        )
    if len(seq) == 0 or _is_constant(states[-2]):
        return None
    xstar = final[0]
    prev = states[-2]
    last = seq.matrices[-1]

    def side(node):
        d = prev[node - 1] - xstar
        return 0 if d == 0 else (1 if d > 0 else -1)

    start = min(node for node in range(1, G.n + 1) if side(node) != 0)
    visited = [start]
    signs = [side(start)]
    position = {start: 0}
    while True:
        cur = visited[-1]
        want = -signs[-1]
        candidates = [
            j
            for j in range(1, G.n + 1)
            if j != cur and last.entry(cur - 1, j - 1) > 0 and side(j) == want
        ]
        if not candidates:
            raise InternalContractBreach(
                f"node {cur} reached consensus without an opposite-signed influencer"
            )
        nxt = min(candidates)
        visited.append(nxt)
        signs.append(side(nxt))
        if nxt in position:
            p = position[nxt]
            segment = visited[p:-1]
            cycle = [segment[0]] + list(reversed(segment[1:]))
            break
        position[nxt] = len(visited) - 1

    walk = SignWalk(
        xstar=xstar,
        visited=visited,
        signs=["+" if s > 0 else "-" for s in signs],
        cycle=cycle,
    )
    _assert_certificate(G, walk)
    return walk


def _assert_certificate(G: Graph, walk: SignWalk):
    # the walk is only returned once these hold; a failure here is a bug
    if len(walk.cycle) % 2 != 0:
        raise InternalContractBreach(f"extracted cycle {walk.cycle} has odd length")
    if len(set(walk.cycle)) != len(walk.cycle):
        raise InternalContractBreach(f"extracted cycle {walk.cycle} repeats a node")
    for a, b in zip(walk.cycle, walk.cycle[1:] + walk.cycle[:1]):
        if not G.has_arc(a, b):
            raise InternalContractBreach(f"cycle step ({a}, {b}) is not an arc")
    for s, t in zip(walk.signs, walk.signs[1:]):
        if s == t:
            raise InternalContractBreach("walk signs do not alternate")


def has_same_sign_pair(x: Sequence) -> bool:
    """Cyclically consecutive entries sharing a weak sign (zero counts both)."""
    n = len(x)
    return any(
        (x[i] >= 0 and x[(i + 1) % n] >= 0) or (x[i] <= 0 and x[(i + 1) % n] <= 0)
        for i in range(n)
    )


def check_sign_lemma(A: RationalMatrix, x: Sequence, n_even: int) -> bool:
    """One exact step of the same-sign-pair preservation check on a cycle.

    A must be stochastic with positive diagonal and consistent with the
    even directed cycle on n_even nodes (node i listening to node i+1), and
    x must already contain a cyclically consecutive same-sign pair. Returns
    whether A @ x still does; the point of the exercise is that this is
    always True.
    """
    if n_even % 2 != 0 or n_even < 2:
        raise PreconditionError(f"check_sign_lemma: cycle length {n_even} is not even")
    if A.n != n_even or len(x) != n_even:
        raise PreconditionError(
            f"check_sign_lemma: matrix order {A.n} / vector length {len(x)} "
            f"vs cycle length {n_even}"
        )
    if not is_stochastic(A):
        raise PreconditionError("check_sign_lemma: matrix is not stochastic")
    if not has_positive_diagonal(A):
        raise PreconditionError("check_sign_lemma: matrix diagonal is not positive")
    if not is_consistent(A, directed_cycle(n_even)):
        raise PreconditionError(
            "check_sign_lemma: matrix is not consistent with the directed cycle"
        )
    xq = tuple(mpq(v) for v in x)
    if not has_same_sign_pair(xq):
        raise PreconditionError(
            "check_sign_lemma: input vector has no same-sign consecutive pair"
        )
    return has_same_sign_pair(mat_vec(A, xq))


@dataclass(frozen=True)
class PartitionTrace:
    """Replay of the minimum-over-V1 lower bound on a partitioned graph."""

    v1: frozenset
    v2: frozenset
    h_values: list
    a_star_values: list
    bound: Rational
    v2_stayed_zero: bool
    final_state: tuple

    def to_dict(self) -> dict:
        return {
            "v1": sorted(self.v1),
            "v2": sorted(self.v2),
            "h": [format_rational(h) for h in self.h_values],
            "a_star": [format_rational(a) for a in self.a_star_values],
            "bound": format_rational(self.bound),
            "v2_stayed_zero": self.v2_stayed_zero,
        }


def partition_bound_trace(
    G: Graph, V1: frozenset, seq: MatrixSequence, x0: Sequence
) -> PartitionTrace:
    """Track h(t) = min over V1 and check h(t+1) >= a_t* h(t) exactly.

    V1 must be nonempty, proper, and receive no arc from its complement;
    x0 must be exactly 1 on V1 and 0 elsewhere. Since V1 rows of consistent
    matrices place no weight outside V1 and all values stay nonnegative, h
    can shrink by at most the smallest V1 diagonal per step, so h(T) is at
    least the product of those diagonals and never reaches 0. Whether the
    complement stays at 0 depends on arcs from V1 into it; the trace records
    the outcome.
    """
    v1 = frozenset(V1)
    nodes = frozenset(range(1, G.n + 1))
    if not v1 or not v1 < nodes:
        raise PreconditionError(
            f"partition_bound_trace: V1 must be a nonempty proper subset of 1..{G.n}"
        )
    v2 = nodes - v1
    for u, v in G.arcs:
        if u in v2 and v in v1:
            raise PreconditionError(
                f"partition_bound_trace: arc ({u}, {v}) enters V1 from its complement"
            )
    if len(x0) != G.n:
        raise PreconditionError(
            f"partition_bound_trace: initial vector of length {len(x0)} for {G.n} nodes"
        )
    xq = tuple(mpq(v) for v in x0)
    for node in range(1, G.n + 1):
        expected = _ONE if node in v1 else _ZERO
        if xq[node - 1] != expected:
            raise PreconditionError(
                f"partition_bound_trace: x0 must be 1 on V1 and 0 elsewhere "
                f"(node {node} holds {xq[node - 1]})"
            )
    _validate_sequence(G, seq, "partition_bound_trace")

    states = _trajectory(seq, xq)
    h_values = [min(s[node - 1] for node in v1) for s in states]
    a_star_values = [
        min(A.entry(node - 1, node - 1) for node in v1) for A in seq.matrices
    ]
    for t, a in enumerate(a_star_values):
        if h_values[t + 1] < a * h_values[t]:
            raise InternalContractBreach(
                f"h({t + 1}) = {h_values[t + 1]} fell below "
                f"a* h({t}) = {a * h_values[t]}"
            )
    bound = _ONE
    for a in a_star_values:
        bound *= a
    v2_zero = all(s[node - 1] == 0 for s in states for node in v2)
    return PartitionTrace(
        v1=v1,
        v2=v2,
        h_values=h_values,
        a_star_values=a_star_values,
        bound=bound,
        v2_stayed_zero=v2_zero,
        final_state=states[-1],
    )


def random_consistent_matrix(
    G: Graph, rng: random.Random, min_diagonal: Rational = mpq(1, 10)
) -> RationalMatrix:
    """A random stochastic matrix consistent with G, exact and seeded.

    Each permitted off-diagonal position is switched on with probability
    1/2 (so sparsity varies run to run), the diagonal draws a value in
    [min_diagonal, 1), and the leftover row mass is split over the active
    positions by random positive integers. Rows with no active position
    stay identity rows; in particular the empty-arc graph yields exactly
    the identity matrix.
    """
    min_diagonal = mpq(min_diagonal)
    if not (_ZERO < min_diagonal < _ONE):
        raise PreconditionError(
            f"random_consistent_matrix: min_diagonal {min_diagonal} outside (0, 1)"
        )
    rows = {}
    for node in range(1, G.n + 1):
        active = [j for j in G.in_neighbors(node) if rng.randrange(2)]
        if not active:
            continue
        diag = min_diagonal + (_ONE - min_diagonal) * mpq(rng.randrange(8), 8)
        raw = [rng.randrange(1, 17) for _ in active]
        total = sum(raw)
        mass = _ONE - diag
        row = {node - 1: diag}
        for j, r in zip(active, raw):
            row[j - 1] = mass * mpq(r, total)
        rows[node - 1] = row
    return RationalMatrix.from_row_updates(G.n, rows)


@dataclass(frozen=True)
class EvidenceReport:
    """Outcome of a randomized no-rank-one-product search on a cycle."""

    cycle_length: int
    trials: int
    max_length: int
    seed: int
    rank_one_products: int
    sign_checks: int
    sign_violations: int
    note: str = field(
        default=(
            "randomized evidence only: absence of rank-one products among "
            "sampled sequences is not a proof of impossibility"
        )
    )

    def to_dict(self) -> dict:
        return {
            "cycle_length": self.cycle_length,
            "trials": self.trials,
            "max_length": self.max_length,
            "seed": self.seed,
            "rank_one_products": self.rank_one_products,
            "sign_checks": self.sign_checks,
            "sign_violations": self.sign_violations,
            "note": self.note,
        }


def cycle_impossibility_evidence(
    cycle_length: int, trials: int, max_length: int, seed: int
) -> EvidenceReport:
    """Probe an even directed cycle for consensus-achieving sequences.

    Draws `trials` random consistent sequences of length 1..max_length and
    counts rank-one products (none are ever expected). Along each run it
    also re-checks same-sign-pair preservation for the start (1,1,0,...,0)
    shifted by 2/n, the value an averaging run would have to reach.
    """
    if cycle_length % 2 != 0 or cycle_length < 4:
        raise PreconditionError(
            f"cycle_impossibility_evidence: cycle length must be even and >= 4, "
            f"got {cycle_length}"
        )
    if max_length < 1:
        raise PreconditionError("cycle_impossibility_evidence: max_length must be >= 1")
    G = directed_cycle(cycle_length)
    rng = random.Random(seed)
    xstar = mpq(2, cycle_length)
    x0 = tuple(
        (_ONE if node <= 2 else _ZERO) for node in range(1, cycle_length + 1)
    )
    rank_one = 0
    checks = 0
    violations = 0
    for _ in range(max(trials, 0)):
        length = rng.randrange(1, max_length + 1)
        product = RationalMatrix.identity(cycle_length)
        x = x0
        shifted = tuple(v - xstar for v in x)
        checks += 1
        if not has_same_sign_pair(shifted):
            violations += 1
        for _ in range(length):
            A = random_consistent_matrix(G, rng)
            product = mat_mul(A, product)
            x = mat_vec(A, x)
            checks += 1
            if not has_same_sign_pair(tuple(v - xstar for v in x)):
                violations += 1
        if is_rank_one_stochastic(product):
            rank_one += 1
    return EvidenceReport(
        cycle_length=cycle_length,
        trials=max(trials, 0),
        max_length=max_length,
        seed=seed,
        rank_one_products=rank_one,
        sign_checks=checks,
        sign_violations=violations,
    )
