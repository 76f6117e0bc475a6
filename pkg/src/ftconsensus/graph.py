"""Directed graphs, bidirectional spanning trees, and tree layerings.

Nodes are the integers 1..n. An arc (j, i) means information may flow from
node j to node i, i.e. a consistent update matrix may give node i a positive
weight on node j's previous value. Self-loops are never stored; diagonal
matrix entries are always permitted.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional


class CycleLimitExceeded(ValueError):
    """Raised when cycle enumeration is asked to run on too large a graph."""


class LayeringError(ValueError):
    """Raised when a tree/root pair cannot be layered."""


@dataclass(frozen=True)
class Graph:
    """A finite directed graph on nodes 1..n with no self-loops."""

    n: int
    arcs: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be positive, got {self.n}")
        for arc in self.arcs:
            if not (isinstance(arc, tuple) and len(arc) == 2):
                raise ValueError(f"arc {arc!r} is not a pair")
            u, v = arc
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise ValueError(f"arc ({u}, {v}) outside node range 1..{self.n}")
            if u == v:
                raise ValueError(f"self-loop ({u}, {v}) not allowed")

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable) -> "Graph":
        return cls(n, frozenset((int(u), int(v)) for u, v in arcs))

    @classmethod
    def undirected(cls, n: int, edges: Iterable) -> "Graph":
        """Build a graph with both arc directions for every given edge."""
        arcs = set()
        for u, v in edges:
            arcs.add((int(u), int(v)))
            arcs.add((int(v), int(u)))
        return cls(n, frozenset(arcs))

    def has_arc(self, u: int, v: int) -> bool:
        return (u, v) in self.arcs

    def out_neighbors(self, u: int) -> list:
        return sorted(v for (a, v) in self.arcs if a == u)

    def in_neighbors(self, v: int) -> list:
        return sorted(u for (u, b) in self.arcs if b == v)

    def to_dict(self) -> dict:
        return {"n": self.n, "arcs": [list(a) for a in sorted(self.arcs)]}

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        n = data["n"]
        arcs = data.get("arcs", [])
        if data.get("undirected"):
            return cls.undirected(n, arcs)
        return cls.from_arcs(n, arcs)


def directed_cycle(n: int) -> Graph:
    """The n-node directed cycle with arcs (i, i-1) for i=2..n plus (1, n).

    Under this orientation node i listens to node i+1 (cyclically), so a
    consistent matrix may mix x_i with x_{i+1}.
    """
    if n < 2:
        raise ValueError("a directed cycle needs at least 2 nodes")
    arcs = {(i, i - 1) for i in range(2, n + 1)}
    arcs.add((1, n))
    return Graph(n, frozenset(arcs))


def bidirectional_subgraph(G: Graph) -> Graph:
    """Keep exactly the arcs whose reverse is also present."""
    arcs = frozenset(a for a in G.arcs if (a[1], a[0]) in G.arcs)
    return Graph(G.n, arcs)


def _undirected_adjacency(G: Graph) -> dict:
    adj = {u: set() for u in range(1, G.n + 1)}
    for u, v in G.arcs:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def connected_components(G: Graph) -> list:
    """Connected components of the underlying undirected graph, sorted."""
    adj = _undirected_adjacency(G)
    seen = set()
    comps = []
    for start in range(1, G.n + 1):
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        seen.add(start)
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    queue.append(w)
        comps.append(frozenset(comp))
    return sorted(comps, key=min)


@dataclass
class SpanningTree:
    """An undirected tree on a subset of the nodes 1..n.

    `n` is the ambient node count (matrices built from the tree have order n
    even when the tree covers fewer nodes). `parent` maps each non-root node
    to its neighbor one step closer to `root`; the root maps to None. Every
    tree edge is stored as (min, max).
    """

    n: int
    root: int
    nodes: frozenset
    edges: frozenset
    parent: dict
    _adj: dict = field(init=False, repr=False)

    def __post_init__(self):
        adj = {u: [] for u in self.nodes}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for u in adj:
            adj[u].sort()
        self._adj = adj
        if len(self.edges) != len(self.nodes) - 1:
            raise ValueError("edge count does not match a tree")

    @classmethod
    def from_edges(cls, root: int, edges: Iterable, n: Optional[int] = None) -> "SpanningTree":
        """Build a tree rooted at `root` from an undirected edge list."""
        edges = frozenset((min(u, v), max(u, v)) for u, v in edges)
        nodes = {root}
        for u, v in edges:
            nodes.add(u)
            nodes.add(v)
        ambient = n if n is not None else max(nodes)
        adj = {u: set() for u in nodes}
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        parent = {root: None}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in sorted(adj[u]):
                if w not in parent:
                    parent[w] = u
                    queue.append(w)
        if len(parent) != len(nodes):
            raise ValueError("edges do not form a connected tree")
        return cls(ambient, root, frozenset(nodes), edges, parent)

    def neighbors(self, u: int) -> list:
        return self._adj[u]

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    def is_leaf(self, u: int) -> bool:
        return len(self._adj[u]) == 1


def find_spanning_tree(G: Graph) -> Optional[SpanningTree]:
    """BFS a spanning tree of the bidirectional subgraph, rooted at node 1.

    Returns None when the bidirectional subgraph does not connect all nodes.
    Deterministic: neighbors are explored in ascending order.
    """
    B = bidirectional_subgraph(G)
    adj = _undirected_adjacency(B)
    parent = {1: None}
    order = deque([1])
    edges = set()
    while order:
        u = order.popleft()
        for w in sorted(adj[u]):
            if w not in parent:
                parent[w] = u
                edges.add((min(u, w), max(u, w)))
                order.append(w)
    if len(parent) != G.n:
        return None
    return SpanningTree(G.n, 1, frozenset(range(1, G.n + 1)), frozenset(edges), parent)


@dataclass
class TreeLayering:
    """Distance layers of a tree as seen from a designated leaf v0.

    Layer k holds the nodes at tree distance k from v0. V_layers[k] are the
    non-leaves at distance k (with V_layers[0] = {v0} by fiat, leaf or not),
    L_layers[k] the leaves at distance k. parent_in_tree maps each node other
    than v0 to its unique neighbor at distance k-1; designated_child maps each
    V-layer node to its smallest neighbor one layer further out.
    """

    v0: int
    dist: dict
    V_layers: tuple
    L_layers: tuple
    parent_in_tree: dict
    designated_child: dict

    @property
    def depth(self) -> int:
        """Largest distance from v0 (number of populated layers minus one)."""
        return len(self.V_layers) - 1

    def v_at(self, k: int) -> frozenset:
        return self.V_layers[k] if 0 <= k <= self.depth else frozenset()

    def l_at(self, k: int) -> frozenset:
        return self.L_layers[k] if 0 <= k <= self.depth else frozenset()

    def all_nodes(self) -> frozenset:
        return frozenset(self.dist)


def layer_decompose(tree: SpanningTree, v0: int) -> TreeLayering:
    """Split a tree into distance layers from v0.

    v0 must be a leaf unless the tree is a single node: the decomposition is
    used to absorb a freshly attached leaf, and only leaves get attached.
    """
    if v0 not in tree.nodes:
        raise LayeringError(f"node {v0} is not in the tree")
    if len(tree.nodes) > 1 and not tree.is_leaf(v0):
        raise LayeringError(f"node {v0} is not a leaf of the tree")
    dist = {v0: 0}
    queue = deque([v0])
    parent = {}
    while queue:
        u = queue.popleft()
        for w in tree.neighbors(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                parent[w] = u
                queue.append(w)
    depth = max(dist.values())
    V = [set() for _ in range(depth + 1)]
    L = [set() for _ in range(depth + 1)]
    V[0].add(v0)
    for u in tree.nodes:
        if u == v0:
            continue
        (L if tree.is_leaf(u) else V)[dist[u]].add(u)
    designated = {}
    for k in range(depth + 1):
        for u in V[k]:
            deeper = [w for w in tree.neighbors(u) if dist[w] == k + 1]
            if deeper:
                designated[u] = min(deeper)
            elif len(tree.nodes) > 1:
                # a non-leaf (or the root of a multi-node tree) always has a
                # neighbor one layer further out
                raise LayeringError(f"node {u} in V_{k} has no deeper neighbor")
    return TreeLayering(
        v0=v0,
        dist=dist,
        V_layers=tuple(frozenset(s) for s in V),
        L_layers=tuple(frozenset(s) for s in L),
        parent_in_tree=parent,
        designated_child=designated,
    )


def tree_diameter(tree: SpanningTree) -> int:
    """Exact diameter (longest path, in edges) via double BFS."""

    def farthest(start):
        dist = {start: 0}
        queue = deque([start])
        far, fd = start, 0
        while queue:
            u = queue.popleft()
            for w in tree.neighbors(u):
                if w not in dist:
                    dist[w] = dist[u] + 1
                    if dist[w] > fd:
                        far, fd = w, dist[w]
                    queue.append(w)
        return far, fd

    u, _ = farthest(min(tree.nodes))
    _, d = farthest(u)
    return d


def _reaches_all(n: int, adj: dict, start: int) -> bool:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == n


def is_strongly_connected(G: Graph) -> bool:
    """True iff every node reaches every other along arcs."""
    fwd = {u: [] for u in range(1, G.n + 1)}
    rev = {u: [] for u in range(1, G.n + 1)}
    for u, v in G.arcs:
        fwd[u].append(v)
        rev[v].append(u)
    return _reaches_all(G.n, fwd, 1) and _reaches_all(G.n, rev, 1)


def enumerate_simple_cycles(
    G: Graph,
    node_limit: int = 20,
    stop_predicate: Optional[Callable] = None,
) -> list:
    """All simple directed cycles, as node lists following the arcs.

    Cycles are produced in a deterministic order: grouped by their smallest
    node (ascending), each cycle listed starting from that node, with DFS
    exploring neighbors in ascending order. When `stop_predicate` returns
    True for a cycle, enumeration stops and the list collected so far
    (including that cycle) is returned.

    Cycle counts grow exponentially, hence the explicit `node_limit` guard.
    """
    if G.n > node_limit:
        raise CycleLimitExceeded(
            f"graph has {G.n} nodes but node_limit={node_limit}; "
            f"pass node_limit={G.n} (or higher) to enumerate anyway"
        )
    out = {u: G.out_neighbors(u) for u in range(1, G.n + 1)}
    cycles = []
    stopped = False

    def circuit(root, v, path, blocked, blame):
        # Johnson-style DFS restricted to nodes >= root; `blame[w]` holds
        # vertices to unblock once w becomes usable again.
        nonlocal stopped
        path.append(v)
        blocked.add(v)
        found = False
        for w in out[v]:
            if stopped:
                break
            if w < root:
                continue
            if w == root:
                cycles.append(list(path))
                found = True
                if stop_predicate is not None and stop_predicate(cycles[-1]):
                    stopped = True
                    break
            elif w not in blocked:
                if circuit(root, w, path, blocked, blame):
                    found = True
        if found:
            unstack = [v]
            while unstack:
                u = unstack.pop()
                if u in blocked:
                    blocked.discard(u)
                    unstack.extend(blame.pop(u, ()))
        else:
            for w in out[v]:
                if w >= root:
                    blame.setdefault(w, set()).add(v)
        path.pop()
        return found

    for root in range(1, G.n + 1):
        if stopped:
            break
        circuit(root, root, [], set(), {})
    return cycles


def has_even_simple_cycle(G: Graph, node_limit: int = 20) -> Optional[list]:
    """First even-length simple cycle in enumeration order, or None.

    A bidirectional arc pair is a 2-cycle and counts. Enumeration stops as
    soon as an even cycle is seen.
    """
    found = enumerate_simple_cycles(
        G, node_limit=node_limit, stop_predicate=lambda c: len(c) % 2 == 0
    )
    if found and len(found[-1]) % 2 == 0:
        return found[-1]
    return None


def is_simple_cycle_graph(G: Graph) -> bool:
    """True iff the arc set is exactly one directed Hamiltonian cycle.

    Requires n >= 3: the 2-node graph with both arcs is treated as a
    bidirectional edge (a spanning tree), not as a pure cycle.
    """
    if G.n < 3 or len(G.arcs) != G.n:
        return False
    outdeg = {u: 0 for u in range(1, G.n + 1)}
    indeg = {u: 0 for u in range(1, G.n + 1)}
    for u, v in G.arcs:
        outdeg[u] += 1
        indeg[v] += 1
    if any(outdeg[u] != 1 or indeg[u] != 1 for u in outdeg):
        return False
    return is_strongly_connected(G)
