"""Shared generators and independent oracles for the test suite.

The oracles deliberately avoid the library's own machinery: they run on
fractions.Fraction and dense lists (vs gmpy2 and sparse rows), use all-pairs
reachability (vs the two-sweep connectivity check), and enumerate cycles by
plain DFS from every start node (vs the blocking-based enumerator). Agreement
between the two stacks is what the property tests assert.
"""

import heapq
import random
from fractions import Fraction

from ftconsensus import Graph


# ---------------------------------------------------------------- generators

def random_tree_edges(n, rng):
    """Uniform random labeled tree on 1..n, decoded from a Prüfer sequence."""
    if n == 1:
        return []
    if n == 2:
        return [(1, 2)]
    seq = [rng.randrange(1, n + 1) for _ in range(n - 2)]
    degree = [1] * (n + 1)
    for v in seq:
        degree[v] += 1
    leaves = [v for v in range(1, n + 1) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, v))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return edges


def random_tree(n, rng):
    return Graph.undirected(n, random_tree_edges(n, rng))


def path_graph(n):
    return Graph.undirected(n, [(i, i + 1) for i in range(1, n)])


def star_graph(n):
    return Graph.undirected(n, [(1, i) for i in range(2, n + 1)])


def random_digraph(n, rng, p=0.3):
    arcs = [
        (u, v)
        for u in range(1, n + 1)
        for v in range(1, n + 1)
        if u != v and rng.random() < p
    ]
    return Graph.from_arcs(n, arcs)


# ------------------------------------------------------------------- oracles

def frac(q):
    return Fraction(int(q.numerator), int(q.denominator))


def frac_dense(A):
    return [[frac(A.entry(i, j)) for j in range(A.n)] for i in range(A.n)]


def frac_mat_mul(X, Y):
    n = len(X)
    return [
        [sum(X[i][k] * Y[k][j] for k in range(n)) for j in range(n)]
        for i in range(n)
    ]


def frac_mat_vec(X, x):
    return [sum(row[j] * x[j] for j in range(len(row))) for row in X]


def frac_product(matrices, n):
    product = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for A in matrices:
        product = frac_mat_mul(frac_dense(A), product)
    return product


def oracle_reachable(G, start):
    seen = {start}
    queue = [start]
    while queue:
        u = queue.pop()
        for v in G.out_neighbors(u):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def oracle_strongly_connected(G):
    nodes = set(range(1, G.n + 1))
    return all(oracle_reachable(G, v) == nodes for v in nodes)


def oracle_simple_cycles(G):
    """Every simple directed cycle, written from its smallest node."""
    cycles = set()

    def dfs(start, node, on_path, path):
        for nxt in G.out_neighbors(node):
            if nxt == start:
                cycles.add(tuple(path))
            elif nxt > start and nxt not in on_path:
                dfs(start, nxt, on_path | {nxt}, path + [nxt])

    for s in range(1, G.n + 1):
        dfs(s, s, {s}, [s])
    return cycles


def oracle_has_even_cycle(G):
    return any(len(c) % 2 == 0 for c in oracle_simple_cycles(G))


def oracle_tree_distances(tree, start):
    dist = {start: 0}
    queue = [start]
    while queue:
        u = queue.pop(0)
        for v in tree.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def oracle_tree_diameter(tree):
    return max(
        d for v in tree.nodes for d in oracle_tree_distances(tree, v).values()
    )


def seeded(seed):
    return random.Random(seed)
