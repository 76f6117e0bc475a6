"""Command-line front end plus the run/verify operations it exposes.

All file formats are JSON with 1-based node ids and rationals written as
strings "p" or "p/q":

  graph     {"n": 4, "arcs": [[2, 1], [3, 2]], "undirected": false}
  sequence  {"n": 2, "matrices": [[["1/2", "1/2"], ["1/2", "1/2"]]]}
  vector    {"x": ["1", "0", "0", "0"]}

Exit codes: 0 success, 1 failed check (verification failure, infeasible
construction, anomaly in an evidence run), 2 malformed input or usage.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

from gmpy2 import mpq

from .analysis import (
    InternalContractBreach,
    PreconditionError,
    assess_feasibility,
    cycle_impossibility_evidence,
    extract_even_cycle_certificate,
)
from .construction import (
    MatrixSequence,
    NoBidirectionalSpanningTree,
    construct_average_sequence,
    construct_weighted_sequence,
)
from .graph import CycleLimitExceeded, Graph
from .ratlinalg import (
    DimensionMismatch,
    RationalMatrix,
    format_rational,
    has_positive_diagonal,
    is_average_matrix,
    is_consistent,
    is_rank_one_stochastic,
    is_stochastic,
    mat_vec,
    parse_rational,
)

_ZERO = mpq(0)


class FileFormatError(ValueError):
    """An input file could not be parsed against its expected schema."""

    def __init__(self, path, detail):
        self.path = path
        self.detail = detail
        super().__init__(f"{path}: {detail}")


def _read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise FileFormatError(path, f"cannot read file ({exc.strerror or exc})") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(
            path, f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _is_plain_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def load_graph(path) -> Graph:
    data = _read_json(path)
    if not isinstance(data, dict) or not _is_plain_int(data.get("n")):
        raise FileFormatError(
            path, 'expected {"n": <int>, "arcs": [[u, v], ...]} with 1-based node ids'
        )
    arcs = data.get("arcs", [])
    if not isinstance(arcs, list):
        raise FileFormatError(path, '"arcs" must be an array of [u, v] pairs')
    for k, arc in enumerate(arcs):
        if not (
            isinstance(arc, list)
            and len(arc) == 2
            and all(_is_plain_int(x) for x in arc)
        ):
            raise FileFormatError(
                path, f"arc {k + 1} is {arc!r}, expected a pair of integer node ids"
            )
    try:
        return Graph.from_dict(data)
    except ValueError as exc:
        raise FileFormatError(path, str(exc)) from exc


def load_sequence(path) -> MatrixSequence:
    data = _read_json(path)
    if (
        not isinstance(data, dict)
        or not _is_plain_int(data.get("n"))
        or not isinstance(data.get("matrices"), list)
    ):
        raise FileFormatError(
            path,
            'expected {"n": <int>, "matrices": [[[rational strings]]]} '
            'with entries like "1/2"',
        )
    try:
        return MatrixSequence.from_dict(data)
    except (ValueError, TypeError, DimensionMismatch) as exc:
        raise FileFormatError(path, str(exc)) from exc


def load_vector(path) -> tuple:
    data = _read_json(path)
    if not isinstance(data, dict) or not isinstance(data.get("x"), list) or not data["x"]:
        raise FileFormatError(
            path, 'expected {"x": [rational strings]} with entries like "1/4"'
        )
    values = []
    for k, item in enumerate(data["x"]):
        if _is_plain_int(item):
            values.append(mpq(item))
            continue
        if isinstance(item, str):
            try:
                values.append(parse_rational(item))
                continue
            except ValueError as exc:
                raise FileFormatError(path, f'entry {k + 1} of "x": {exc}') from exc
        raise FileFormatError(
            path,
            f'entry {k + 1} of "x" is {item!r}; write rationals as strings, '
            f'e.g. "1/3" (floats are not accepted)',
        )
    return tuple(values)


@dataclass(frozen=True)
class Trajectory:
    """States x(0), x(1), ... of a sequence run, exact or floating-point."""

    n: int
    mode: str
    states: tuple
    consensus_at: Optional[int]

    def to_dict(self) -> dict:
        if self.mode == "exact":
            states = [[format_rational(v) for v in s] for s in self.states]
        else:
            states = [[float(v) for v in s] for s in self.states]
        return {"mode": self.mode, "states": states, "consensus_at": self.consensus_at}


def _apply_float(A, x):
    # column-sorted summation keeps float runs reproducible
    return tuple(
        sum(float(v) * x[j] for j, v in sorted(row.items())) for row in A.rows
    )


def simulate(
    seq: MatrixSequence, x0: Sequence, mode: str = "exact", tolerance: float = 1e-9
) -> Trajectory:
    """Run x(t) = A_t x(t-1) and report the earliest consensus time.

    Exact mode compares states for literal equality; approx mode runs in
    floats and calls a state consensus when max - min < tolerance.
    """
    if mode not in ("exact", "approx"):
        raise ValueError(f"mode must be 'exact' or 'approx', got {mode!r}")
    if len(x0) != seq.n:
        raise DimensionMismatch(
            f"initial vector of length {len(x0)} for a sequence of order {seq.n}"
        )
    if mode == "exact":
        state = tuple(mpq(v) for v in x0)
        constant = lambda s: all(v == s[0] for v in s)
        step = mat_vec
    else:
        if tolerance < 0:
            raise ValueError(f"tolerance must be nonnegative, got {tolerance}")
        state = tuple(float(v) for v in x0)
        constant = lambda s: max(s) - min(s) < tolerance
        step = _apply_float
    states = [state]
    for A in seq.matrices:
        state = step(A, state)
        states.append(state)
    consensus_at = next((t for t, s in enumerate(states) if constant(s)), None)
    return Trajectory(n=seq.n, mode=mode, states=tuple(states), consensus_at=consensus_at)


@dataclass(frozen=True)
class VerificationFailure:
    matrix_index: Optional[int]  # 1-based; None for product-level failures
    check: str
    detail: str

    def to_dict(self) -> dict:
        return {
            "matrix_index": self.matrix_index,
            "check": self.check,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of checking a sequence against a graph and a product goal."""

    ok: bool
    goal: str
    n: int
    length: int
    failures: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "goal": self.goal,
            "n": self.n,
            "length": self.length,
            "failures": [f.to_dict() for f in self.failures],
        }


def _stochastic_detail(A) -> str:
    for i, row in enumerate(A.rows):
        for j in sorted(row):
            if row[j] < 0:
                return (
                    f"row {i + 1} has negative entry {format_rational(row[j])} "
                    f"at column {j + 1}"
                )
        total = sum(row.values(), _ZERO)
        if total != 1:
            return f"row {i + 1} sums to {format_rational(total)}"
    return "rows are stochastic"


def _diagonal_detail(A) -> str:
    for i in range(A.n):
        if A.entry(i, i) <= 0:
            return f"diagonal entry of row {i + 1} is {format_rational(A.entry(i, i))}"
    return "diagonal is positive"


def _consistency_detail(A, G) -> str:
    for i, row in enumerate(A.rows):
        for j in sorted(row):
            if i != j and row[j] > 0 and not G.has_arc(j + 1, i + 1):
                return (
                    f"entry ({i + 1}, {j + 1}) is positive but the graph has "
                    f"no arc ({j + 1}, {i + 1})"
                )
    return "matrix is consistent"


def verify_sequence(G: Graph, seq: MatrixSequence, goal: str = "average") -> VerificationReport:
    """Check every matrix (stochastic, positive diagonal, consistent with G)
    and the exact product goal: "average" demands the uniform averaging
    matrix, "consensus" any rank-one stochastic product."""
    if goal not in ("average", "consensus"):
        raise ValueError(f"goal must be 'average' or 'consensus', got {goal!r}")
    failures = []
    if seq.n != G.n:
        failures.append(
            VerificationFailure(
                None, "order", f"sequence order {seq.n} vs graph on {G.n} nodes"
            )
        )
        return VerificationReport(False, goal, seq.n, len(seq), tuple(failures))
    for t, A in enumerate(seq.matrices, start=1):
        if not is_stochastic(A):
            failures.append(VerificationFailure(t, "stochastic", _stochastic_detail(A)))
        if not has_positive_diagonal(A):
            failures.append(
                VerificationFailure(t, "positive_diagonal", _diagonal_detail(A))
            )
        if not is_consistent(A, G):
            failures.append(
                VerificationFailure(t, "consistent", _consistency_detail(A, G))
            )
    product = seq.product()
    if goal == "average":
        if not is_average_matrix(product):
            row = ", ".join(format_rational(v) for v in product.dense()[0])
            failures.append(
                VerificationFailure(
                    None,
                    "product",
                    f"product is not the exact uniform averaging matrix "
                    f"(row 1 is [{row}])",
                )
            )
    else:
        if not is_rank_one_stochastic(product):
            if not is_stochastic(product):
                detail = "product is not stochastic"
            else:
                k = next(i for i, row in enumerate(product.rows) if row != product.rows[0])
                detail = f"product rows 1 and {k + 1} differ"
            failures.append(VerificationFailure(None, "product", detail))
    return VerificationReport(not failures, goal, seq.n, len(seq), tuple(failures))


def demo_graph() -> Graph:
    """Four nodes on a directed ring with one bidirectional chord 1-3."""
    return Graph.from_arcs(4, [(2, 1), (3, 2), (4, 3), (1, 4), (1, 3), (3, 1)])


def demo_sequence() -> MatrixSequence:
    """Four matrices on the demo graph whose product is the exact average.

    Odd steps pair each node with its ring successor; even steps pair the
    chord endpoints 1 and 3 over both chord directions.
    """
    half = mpq(1, 2)
    odd = [
        {0: half, 1: half},
        {1: half, 2: half},
        {2: half, 3: half},
        {3: half, 0: half},
    ]
    even = [
        {0: half, 2: half},
        {1: half, 2: half},
        {0: half, 2: half},
        {0: half, 3: half},
    ]
    a_odd = RationalMatrix(4, tuple(dict(r) for r in odd))
    a_even = RationalMatrix(4, tuple(dict(r) for r in even))
    return MatrixSequence(4, (a_odd, a_even, a_odd, a_even))


def run_demo() -> str:
    """End-to-end walkthrough on the built-in four-node example.

    The output is deterministic byte for byte: verification of the exact
    average product, the feasibility verdict, and the full trajectory from
    x(0) = (1, 0, 0, 0).
    """
    G = demo_graph()
    seq = demo_sequence()
    report = verify_sequence(G, seq, goal="average")
    if not report.ok:
        raise InternalContractBreach("built-in demo sequence failed verification")
    verdict = assess_feasibility(G)
    traj = simulate(seq, (1, 0, 0, 0))
    lines = []
    lines.append("four-node directed ring with a bidirectional chord between 1 and 3")
    arcs = " ".join(f"({u},{v})" for u, v in sorted(G.arcs))
    lines.append(f"graph: n={G.n}, arcs {arcs}")
    lines.append(f"sequence: {len(seq)} exact stochastic matrices")
    lines.append("verify(average): ok, product is the uniform averaging matrix")
    even = verdict.even_simple_cycle
    lines.append(
        f"feasibility: {verdict.status} (strongly connected: {verdict.strongly_connected}, "
        f"even simple cycle: {even}, bidirectional spanning tree: "
        f"{verdict.bidirectional_spanning_tree})"
    )
    lines.append("trajectory from (1, 0, 0, 0):")
    for t, state in enumerate(traj.states):
        pretty = " ".join(format_rational(v) for v in state)
        lines.append(f"  t={t}  {pretty}")
    lines.append(f"consensus at t={traj.consensus_at}")
    return "\n".join(lines) + "\n"


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit_json(data, out: Optional[str] = None):
    _emit(json.dumps(data, indent=2) + "\n", out)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _cmd_construct(args) -> int:
    G = load_graph(args.graph)
    try:
        if args.weights is None:
            seq = construct_average_sequence(G)
        else:
            weights = load_vector(args.weights)
            seq = construct_weighted_sequence(G, weights)
    except NoBidirectionalSpanningTree as exc:
        return _fail(str(exc), 1)
    except ValueError as exc:
        if isinstance(exc, FileFormatError):
            raise
        return _fail(str(exc), 2)  # bad weight vector
    _emit_json(seq.to_dict(), args.out)
    return 0


def _cmd_verify(args) -> int:
    G = load_graph(args.graph)
    seq = load_sequence(args.seq)
    report = verify_sequence(G, seq, goal=args.goal)
    _emit_json(report.to_dict())
    return 0 if report.ok else 1


def _cmd_simulate(args) -> int:
    seq = load_sequence(args.seq)
    x0 = load_vector(args.init)
    if len(x0) != seq.n:
        return _fail(
            f"{args.init}: vector length {len(x0)} does not match sequence order {seq.n}",
            2,
        )
    if args.graph is not None:
        G = load_graph(args.graph)
        if G.n != seq.n:
            return _fail(f"sequence order {seq.n} vs graph on {G.n} nodes", 1)
        for t, A in enumerate(seq.matrices, start=1):
            if not is_consistent(A, G):
                return _fail(f"matrix {t} is not consistent with the graph", 1)
    traj = simulate(seq, x0, mode=args.mode, tolerance=args.tolerance)
    _emit_json(traj.to_dict())
    return 0


def _cmd_analyze(args) -> int:
    G = load_graph(args.graph)
    try:
        verdict = assess_feasibility(G, cycle_node_limit=args.cycle_node_limit)
    except CycleLimitExceeded as exc:
        return _fail(str(exc), 2)
    _emit_json(verdict.to_dict())
    return 0


def _cmd_certificate(args) -> int:
    G = load_graph(args.graph)
    seq = load_sequence(args.seq)
    x0 = load_vector(args.init)
    walk = extract_even_cycle_certificate(G, seq, x0)
    if walk is None:
        _emit_json({"degenerate": True})
    else:
        _emit_json(walk.to_dict())
    return 0


def _cmd_evidence(args) -> int:
    if args.cycle_length % 2 != 0 or args.cycle_length < 4:
        return _fail(
            f"--cycle-length must be an even integer >= 4, got {args.cycle_length}", 2
        )
    if args.max_length < 1:
        return _fail(f"--max-length must be >= 1, got {args.max_length}", 2)
    if args.trials < 0:
        return _fail(f"--trials must be >= 0, got {args.trials}", 2)
    report = cycle_impossibility_evidence(
        args.cycle_length, args.trials, args.max_length, args.seed
    )
    _emit_json(report.to_dict())
    return 1 if (report.rank_one_products or report.sign_violations) else 0


def _cmd_demo(args) -> int:
    sys.stdout.write(run_demo())
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftconsensus",
        description=(
            "Exact finite-time average-consensus sequences on directed graphs: "
            "construct, verify, simulate, and analyze in rational arithmetic."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser(
        "construct",
        help="build an exact averaging sequence for a graph with a "
        "bidirectional spanning tree",
    )
    p.add_argument("--graph", required=True, metavar="FILE", help="graph JSON file")
    p.add_argument(
        "--weights",
        metavar="FILE",
        help='vector JSON file {"x": [...]} of positive rationals summing to 1; '
        "targets the weighted average instead of the uniform one",
    )
    p.add_argument("--out", metavar="FILE", help="write the sequence here, not stdout")
    p.set_defaults(handler=_cmd_construct)

    p = sub.add_parser(
        "verify", help="check a sequence against a graph and an exact product goal"
    )
    p.add_argument("--graph", required=True, metavar="FILE")
    p.add_argument("--seq", required=True, metavar="FILE", help="sequence JSON file")
    p.add_argument(
        "--goal",
        choices=("average", "consensus"),
        default="average",
        help="average: product must equal the uniform averaging matrix; "
        "consensus: any rank-one stochastic product (default: average)",
    )
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("simulate", help="run a sequence on an initial vector")
    p.add_argument("--seq", required=True, metavar="FILE", help="sequence JSON file")
    p.add_argument("--init", required=True, metavar="FILE", help="initial vector JSON file")
    p.add_argument(
        "--graph",
        metavar="FILE",
        help="optional graph; the sequence must be consistent with it",
    )
    p.add_argument(
        "--mode",
        choices=("exact", "approx"),
        default="exact",
        help="exact rational arithmetic or floating point (default: exact)",
    )
    p.add_argument(
        "--tolerance",
        type=float,
        default=1e-9,
        help="consensus tolerance for approx mode (default: 1e-9)",
    )
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("analyze", help="feasibility verdict for a graph")
    p.add_argument("--graph", required=True, metavar="FILE")
    p.add_argument(
        "--cycle-node-limit",
        type=int,
        default=20,
        metavar="N",
        help="refuse cycle enumeration on graphs larger than this (default: 20)",
    )
    p.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser(
        "certificate",
        help="extract the even-cycle certificate from a consensus-achieving run",
    )
    p.add_argument("--graph", required=True, metavar="FILE")
    p.add_argument("--seq", required=True, metavar="FILE")
    p.add_argument("--init", required=True, metavar="FILE")
    p.set_defaults(handler=_cmd_certificate)

    p = sub.add_parser(
        "evidence",
        help="randomized search for consensus-achieving products on an even "
        "directed cycle (reports evidence, not proof)",
    )
    p.add_argument("--cycle-length", required=True, type=int, metavar="N")
    p.add_argument("--trials", type=int, default=1000, metavar="K")
    p.add_argument("--max-length", type=int, default=8, metavar="L")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.set_defaults(handler=_cmd_evidence)

    p = sub.add_parser("demo", help="deterministic walkthrough on a built-in example")
    p.set_defaults(handler=_cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except FileFormatError as exc:
        return _fail(str(exc), 2)
    except (PreconditionError, NoBidirectionalSpanningTree) as exc:
        return _fail(str(exc), 1)
    except CycleLimitExceeded as exc:
        return _fail(str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
