"""Finite-time averaging sequences on bidirectional spanning trees.

The builder works by leaf absorption. Leaves are pruned from the tree one at
a time (always the smallest-ID leaf); the sequence is then assembled in the
reverse order. When a leaf v0 is re-attached to an already-averaged subtree
S, linearity reduces the remaining work to one canonical correction vector:
v0 holds 1 and every node of S holds -gamma, where gamma is chosen so that
the corrected values average to the new target. Driving that vector to zero
takes diam(T) stochastic steps over the grown tree T = S + v0:

  step k:   nodes of V_k move from -gamma to 1/2^k by mixing with their
            parent (which holds 1/2^(k-1)),
            leaves of L_k move from -gamma straight to 0 the same way,
            nodes of V_(k-1) flush 1/2^(k-1) to 0 by mixing with a
            designated child (which still holds -gamma).

Solving each convex combination gives the exact self-weights used below;
all of them lie strictly between 0 and 1 whenever gamma > 0. For plain
averaging gamma = 1/|S|; for weighted averaging gamma = w(v0)/w(S).
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

from gmpy2 import mpq

from .graph import (
    Graph,
    SpanningTree,
    TreeLayering,
    connected_components,
    bidirectional_subgraph,
    find_spanning_tree,
    layer_decompose,
    tree_diameter,
)
from .ratlinalg import (
    Rational,
    RationalMatrix,
    matrix_from_strings,
    matrix_to_strings,
    sequence_product,
)

_ZERO = mpq(0)
_ONE = mpq(1)


class NoBidirectionalSpanningTree(ValueError):
    """The graph's bidirectional subgraph does not connect all nodes."""

    def __init__(self, components):
        self.components = components
        pretty = ", ".join("{" + ", ".join(map(str, sorted(c))) + "}" for c in components)
        super().__init__(
            f"no bidirectional spanning tree: the bidirectional subgraph "
            f"splits into components {pretty}"
        )


@dataclass(frozen=True)
class MatrixSequence:
    """A finite sequence of order-n matrices, applied first to last."""

    n: int
    matrices: tuple

    def __post_init__(self):
        for A in self.matrices:
            if A.n != self.n:
                raise ValueError(f"matrix of order {A.n} in a sequence of order {self.n}")

    def __len__(self) -> int:
        return len(self.matrices)

    def __iter__(self):
        return iter(self.matrices)

    def product(self) -> RationalMatrix:
        return sequence_product(self.matrices, self.n)

    def to_dict(self) -> dict:
        return {"n": self.n, "matrices": [matrix_to_strings(A) for A in self.matrices]}

    @classmethod
    def from_dict(cls, data: dict) -> "MatrixSequence":
        n = data["n"]
        mats = tuple(matrix_from_strings(grid) for grid in data.get("matrices", []))
        for A in mats:
            if A.n != n:
                raise ValueError(f"matrix of order {A.n} in a sequence declaring n={n}")
        return cls(n, mats)


@dataclass(frozen=True)
class AbsorptionStage:
    """One re-attachment: leaf v0 joins an averaged subtree of weight gamma."""

    v0: int
    gamma: Rational
    tree: SpanningTree
    layering: TreeLayering
    steps: MatrixSequence


def _stage_alpha_checks(alpha: Rational):
    if not (_ZERO < alpha < _ONE):
        raise ArithmeticError(f"absorption self-weight {alpha} outside (0, 1)")


def absorption_steps(
    tree: SpanningTree, layering: TreeLayering, gamma: Rational
) -> MatrixSequence:
    """The diam(tree) matrices that zero one canonical correction vector.

    Matrices are emitted over the full node set 1..tree.n; nodes outside the
    tree (and nodes idle at a given step) get identity rows. Steps beyond
    the eccentricity of v0, up to the diameter, are identity matrices.
    """
    gamma = mpq(gamma)
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if layering.v0 not in tree.nodes or layering.all_nodes() != tree.nodes:
        raise ValueError("layering does not describe this tree")
    n = tree.n
    diam = tree_diameter(tree)
    mats = []
    for k in range(1, diam + 1):
        half_prev = mpq(1, 2 ** (k - 1))  # value held by layer k-1 parents
        denom = half_prev + gamma
        updates = {}
        for i in layering.v_at(k):
            alpha = (half_prev / 2) / denom
            _stage_alpha_checks(alpha)
            parent = layering.parent_in_tree[i]
            updates[i - 1] = {i - 1: alpha, parent - 1: _ONE - alpha}
        for i in layering.l_at(k):
            alpha = half_prev / denom
            _stage_alpha_checks(alpha)
            parent = layering.parent_in_tree[i]
            updates[i - 1] = {i - 1: alpha, parent - 1: _ONE - alpha}
        for i in layering.v_at(k - 1):
            alpha = gamma / denom
            _stage_alpha_checks(alpha)
            child = layering.designated_child[i]
            updates[i - 1] = {i - 1: alpha, child - 1: _ONE - alpha}
        mats.append(RationalMatrix.from_row_updates(n, updates))
    return MatrixSequence(n, tuple(mats))


def _removal_order(tree: SpanningTree):
    """Prune smallest-ID leaves until one node remains.

    Returns (removed, attach, last) where `removed` lists nodes in removal
    order and attach[v] is the neighbor v was holding onto when pruned.
    """
    adj = {u: set(tree.neighbors(u)) for u in tree.nodes}
    remaining = set(tree.nodes)
    removed = []
    attach = {}
    while len(remaining) > 1:
        leaf = min(u for u in remaining if len(adj[u]) == 1)
        nb = next(iter(adj[leaf]))
        removed.append(leaf)
        attach[leaf] = nb
        adj[nb].discard(leaf)
        del adj[leaf]
        remaining.discard(leaf)
    return removed, attach, next(iter(remaining))


def absorption_plan(
    tree: SpanningTree, weights: Optional[Sequence] = None
) -> list:
    """The ordered list of absorption stages rebuilding the whole tree.

    With `weights` (one positive rational per node, indexed by node-1) the
    per-stage gamma becomes w(v0)/w(subtree); without, it is 1/|subtree|.
    """
    removed, attach, last = _removal_order(tree)
    sub_nodes = {last}
    sub_edges = []
    stages = []
    for v0 in reversed(removed):
        if weights is None:
            gamma = mpq(1, len(sub_nodes))
        else:
            gamma = mpq(weights[v0 - 1]) / sum(
                (mpq(weights[u - 1]) for u in sub_nodes), _ZERO
            )
        sub_edges.append((min(v0, attach[v0]), max(v0, attach[v0])))
        sub_nodes.add(v0)
        stage_tree = SpanningTree.from_edges(v0, sub_edges, n=tree.n)
        layering = layer_decompose(stage_tree, v0)
        steps = absorption_steps(stage_tree, layering, gamma)
        stages.append(AbsorptionStage(v0, gamma, stage_tree, layering, steps))
    return stages


def _tree_or_raise(G: Graph) -> SpanningTree:
    tree = find_spanning_tree(G)
    if tree is None:
        raise NoBidirectionalSpanningTree(connected_components(bidirectional_subgraph(G)))
    return tree


def construct_average_sequence(G: Graph) -> MatrixSequence:
    """A sequence of at most n(n-1)/2 matrices whose product is (1/n)J.

    Every emitted matrix is stochastic with positive diagonal and consistent
    with G. Requires a bidirectional spanning tree.
    """
    tree = _tree_or_raise(G)
    mats = []
    for stage in absorption_plan(tree):
        mats.extend(stage.steps.matrices)
    return MatrixSequence(G.n, tuple(mats))


def construct_weighted_sequence(G: Graph, weights: Sequence) -> MatrixSequence:
    """A sequence whose product is exactly 1 w^T for the given weights.

    `weights` must be strictly positive rationals, one per node, summing to
    exactly 1. Uniform weights reproduce construct_average_sequence exactly,
    matrix by matrix.
    """
    w = tuple(mpq(x) for x in weights)
    if len(w) != G.n:
        raise ValueError(f"{len(w)} weights for {G.n} nodes")
    if any(x <= 0 for x in w):
        raise ValueError("weights must be strictly positive")
    total = sum(w, _ZERO)
    if total != 1:
        raise ValueError(f"weights must sum to exactly 1, got {total}")
    tree = _tree_or_raise(G)
    mats = []
    for stage in absorption_plan(tree, weights=w):
        mats.extend(stage.steps.matrices)
    return MatrixSequence(G.n, tuple(mats))


@dataclass(frozen=True)
class CorrectionSchedule:
    """Exact per-step targets for one canonical correction vector.

    targets[(node, t)] is the value node must hold after t steps of the
    stage, for every tree node and every 0 <= t <= steps.
    """

    layering: TreeLayering
    gamma: Rational
    steps: int
    targets: dict = field(repr=False)

    @classmethod
    def for_stage(
        cls, layering: TreeLayering, gamma: Rational, steps: int
    ) -> "CorrectionSchedule":
        gamma = mpq(gamma)
        targets = {}
        for node, k in layering.dist.items():
            is_leaf_layer = node in layering.l_at(k)
            for t in range(steps + 1):
                if t < k:
                    targets[(node, t)] = -gamma
                elif is_leaf_layer or t > k:
                    targets[(node, t)] = _ZERO
                else:
                    targets[(node, t)] = mpq(1, 2 ** k)
        return cls(layering, gamma, steps, targets)


@dataclass(frozen=True)
class ScheduleCheck:
    """Outcome of replaying a stage against its correction schedule."""

    ok: bool
    mismatch: Optional[tuple] = None  # (node, step, expected, actual)

    def __bool__(self) -> bool:
        return self.ok


def verify_schedule(
    seq_suffix: MatrixSequence, layering: TreeLayering, gamma: Rational
) -> ScheduleCheck:
    """Replay the canonical correction vector through one stage's matrices.

    The vector starts at 1 on v0, -gamma on the rest of the stage tree, and
    0 elsewhere; every intermediate state must match the schedule exactly,
    and nodes outside the stage tree must never move.
    """
    gamma = mpq(gamma)
    n = seq_suffix.n
    schedule = CorrectionSchedule.for_stage(layering, gamma, len(seq_suffix))
    tree_nodes = layering.all_nodes()
    x = [_ZERO] * n
    for node in tree_nodes:
        x[node - 1] = -gamma
    x[layering.v0 - 1] = _ONE

    def check(state, t):
        for node in range(1, n + 1):
            expected = schedule.targets.get((node, t), _ZERO)
            if state[node - 1] != expected:
                return ScheduleCheck(False, (node, t, expected, state[node - 1]))
        return None

    bad = check(x, 0)
    if bad is not None:
        return bad
    for t, A in enumerate(seq_suffix.matrices, start=1):
        x = [
            sum((v * x[j] for j, v in A.rows[i].items()), _ZERO)
            for i in range(n)
        ]
        bad = check(x, t)
        if bad is not None:
            return bad
    return ScheduleCheck(True)
