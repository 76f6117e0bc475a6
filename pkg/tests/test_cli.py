import json
import subprocess
import sys

import pytest
from gmpy2 import mpq

from ftconsensus import (
    DimensionMismatch,
    FileFormatError,
    Graph,
    MatrixSequence,
    RationalMatrix,
    construct_average_sequence,
    construct_weighted_sequence,
    demo_graph,
    demo_sequence,
    directed_cycle,
    load_graph,
    load_sequence,
    load_vector,
    main,
    matrix_from_strings,
    run_demo,
    simulate,
    verify_sequence,
)
from conftest import random_tree, seeded


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj), encoding="utf-8")
    return str(p)


def _write_text(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


# ------------------------------------------------------------------- loaders

def test_load_graph_round_trip(tmp_path):
    path = _write(tmp_path, "g.json", demo_graph().to_dict())
    assert load_graph(path) == demo_graph()


def test_load_graph_rejects_bad_json(tmp_path):
    path = _write_text(tmp_path, "g.json", "{not json")
    with pytest.raises(FileFormatError) as err:
        load_graph(path)
    assert "line 1" in str(err.value)


def test_load_graph_rejects_bad_schema(tmp_path):
    with pytest.raises(FileFormatError):
        load_graph(_write(tmp_path, "a.json", {"nodes": 3}))
    with pytest.raises(FileFormatError):
        load_graph(_write(tmp_path, "b.json", {"n": 2, "arcs": [[1, 2, 3]]}))
    with pytest.raises(FileFormatError):
        load_graph(_write(tmp_path, "c.json", {"n": 2, "arcs": [[1, 1]]}))
    with pytest.raises(FileFormatError):
        load_graph(_write(tmp_path, "d.json", {"n": 2, "arcs": [[1, 5]]}))


def test_load_sequence_round_trip(tmp_path):
    path = _write(tmp_path, "s.json", demo_sequence().to_dict())
    assert load_sequence(path) == demo_sequence()


def test_load_sequence_rejects_bad_entries(tmp_path):
    with pytest.raises(FileFormatError):
        load_sequence(_write(tmp_path, "a.json", {"n": 2, "matrices": [[["0.5", "0.5"], ["0", "1"]]]}))
    with pytest.raises(FileFormatError):
        load_sequence(_write(tmp_path, "b.json", {"n": 3, "matrices": [[["1", "0"], ["0", "1"]]]}))
    with pytest.raises(FileFormatError):
        load_sequence(_write(tmp_path, "c.json", {"n": 2}))


def test_load_vector_accepts_strings_and_ints(tmp_path):
    path = _write(tmp_path, "x.json", {"x": ["1/3", "-2", 4]})
    assert load_vector(path) == (mpq(1, 3), mpq(-2), mpq(4))


def test_load_vector_rejects_floats_and_junk(tmp_path):
    with pytest.raises(FileFormatError):
        load_vector(_write(tmp_path, "a.json", {"x": [0.5]}))
    with pytest.raises(FileFormatError):
        load_vector(_write(tmp_path, "b.json", {"x": ["1/0"]}))
    with pytest.raises(FileFormatError):
        load_vector(_write(tmp_path, "c.json", {"x": []}))
    with pytest.raises(FileFormatError):
        load_vector(_write(tmp_path, "d.json", {"y": ["1"]}))


# ------------------------------------------------------------------ simulate

def test_simulate_exact_demo_trajectory():
    traj = simulate(demo_sequence(), (1, 0, 0, 0))
    assert traj.consensus_at == 4
    assert traj.states[1] == (mpq(1, 2), 0, 0, mpq(1, 2))
    assert traj.states[2] == (mpq(1, 4), 0, mpq(1, 4), mpq(1, 2))
    assert traj.states[3] == (mpq(1, 8), mpq(1, 8), mpq(3, 8), mpq(3, 8))
    assert traj.states[4] == (mpq(1, 4),) * 4
    d = traj.to_dict()
    assert d["states"][3] == ["1/8", "1/8", "3/8", "3/8"]
    assert d["consensus_at"] == 4


def test_simulate_exact_never_flags_near_consensus():
    A = matrix_from_strings([["2/3", "1/3"], ["1/3", "2/3"]])
    traj = simulate(MatrixSequence(2, (A,) * 40), (1, 0))
    assert traj.consensus_at is None  # exactly equal never happens here


def test_simulate_approx_uses_tolerance():
    A = matrix_from_strings([["2/3", "1/3"], ["1/3", "2/3"]])
    traj = simulate(MatrixSequence(2, (A,) * 40, ), (1, 0), mode="approx")
    assert traj.mode == "approx"
    assert traj.consensus_at is not None
    wide = simulate(MatrixSequence(2, (A,)), (1, 0), mode="approx", tolerance=2.0)
    assert wide.consensus_at == 0


def test_simulate_validates_inputs():
    with pytest.raises(ValueError):
        simulate(demo_sequence(), (1, 0, 0, 0), mode="fuzzy")
    with pytest.raises(DimensionMismatch):
        simulate(demo_sequence(), (1, 0))
    with pytest.raises(ValueError):
        simulate(demo_sequence(), (1, 0, 0, 0), mode="approx", tolerance=-1.0)


def test_simulate_exact_reaches_the_exact_mean_on_constructor_output():
    rng = seeded(404)
    for _ in range(20):
        n = rng.randrange(2, 26)
        seq = construct_average_sequence(random_tree(n, rng))
        x0 = tuple(mpq(rng.randrange(-60, 60), rng.randrange(1, 9)) for _ in range(n))
        traj = simulate(seq, x0)
        mean = sum(x0, mpq(0)) / n
        assert traj.states[-1] == (mean,) * n
        assert traj.consensus_at is not None


def test_simulate_approx_tracks_exact_entrywise():
    rng = seeded(405)
    sequences = [demo_sequence()]
    for _ in range(10):
        sequences.append(construct_average_sequence(random_tree(rng.randrange(2, 16), rng)))
    for seq in sequences:
        x0 = tuple(mpq(rng.randrange(-20, 20), rng.randrange(1, 7)) for _ in range(seq.n))
        exact = simulate(seq, x0, mode="exact")
        approx = simulate(seq, x0, mode="approx")
        for se, sa in zip(exact.states, approx.states):
            assert all(abs(float(ve) - va) <= 1e-9 for ve, va in zip(se, sa))


# -------------------------------------------------------------------- verify

def test_verify_demo_sequence_ok():
    report = verify_sequence(demo_graph(), demo_sequence(), goal="average")
    assert report.ok and report.failures == ()
    assert report.to_dict()["ok"] is True


def test_verify_reports_each_broken_check():
    G = demo_graph()
    bad = matrix_from_strings(
        [
            ["1/2", "1/2", "0", "0"],   # (1,2) has no arc (2 -> 1 is fine, 1 listens to 2)
            ["0", "1/3", "1/3", "0"],   # row sum 2/3
            ["0", "0", "0", "1"],       # zero diagonal
            ["1/2", "0", "0", "1/2"],
        ]
    )
    report = verify_sequence(G, MatrixSequence(4, (bad,)), goal="average")
    assert not report.ok
    checks = {(f.matrix_index, f.check) for f in report.failures}
    assert (1, "stochastic") in checks
    assert (1, "positive_diagonal") in checks
    assert (None, "product") in checks
    # row 1 mixing with node 2 is licensed by arc (2, 1), so no consistency hit
    assert (1, "consistent") not in checks


def test_verify_flags_inconsistent_entries():
    G = Graph.from_arcs(2, [(2, 1)])
    A = matrix_from_strings([["1", "0"], ["1/2", "1/2"]])
    report = verify_sequence(G, MatrixSequence(2, (A,)), goal="consensus")
    assert not report.ok
    assert any(f.check == "consistent" for f in report.failures)
    detail = next(f.detail for f in report.failures if f.check == "consistent")
    assert "no arc (1, 2)" in detail


def test_verify_goal_consensus_accepts_weighted_products():
    G = Graph.undirected(2, [(1, 2)])
    seq = construct_weighted_sequence(G, [mpq(1, 3), mpq(2, 3)])
    assert not verify_sequence(G, seq, goal="average").ok
    assert verify_sequence(G, seq, goal="consensus").ok


def test_verify_order_mismatch_short_circuits():
    report = verify_sequence(Graph.from_arcs(2, []), demo_sequence())
    assert not report.ok
    assert report.failures[0].check == "order"


def test_verify_rejects_unknown_goal():
    with pytest.raises(ValueError):
        verify_sequence(demo_graph(), demo_sequence(), goal="exactly")


# ---------------------------------------------------------------------- demo

def test_run_demo_is_deterministic():
    first = run_demo()
    assert first == run_demo()
    assert "consensus at t=4" in first
    assert "feasibility: Unknown" in first
    assert "t=3  1/8 1/8 3/8 3/8" in first


# ------------------------------------------------------------------ cli main

def test_cli_construct_verify_round_trip(tmp_path, capsys):
    gpath = _write(tmp_path, "g.json", Graph.undirected(4, [(1, 2), (2, 3), (2, 4)]).to_dict())
    out = str(tmp_path / "seq.json")
    assert main(["construct", "--graph", gpath, "--out", out]) == 0
    assert main(["verify", "--graph", gpath, "--seq", out, "--goal", "average"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] is True and report["failures"] == []


def test_cli_construct_weighted(tmp_path, capsys):
    gpath = _write(tmp_path, "g.json", Graph.undirected(2, [(1, 2)]).to_dict())
    wpath = _write(tmp_path, "w.json", {"x": ["1/3", "2/3"]})
    assert main(["construct", "--graph", gpath, "--weights", wpath]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["matrices"] == [[["1/3", "2/3"], ["1/3", "2/3"]]]


def test_cli_construct_infeasible_graph_exits_one(tmp_path, capsys):
    gpath = _write(tmp_path, "g.json", demo_graph().to_dict())
    assert main(["construct", "--graph", gpath]) == 1
    assert "no bidirectional spanning tree" in capsys.readouterr().err


def test_cli_construct_bad_weights_exit_two(tmp_path, capsys):
    gpath = _write(tmp_path, "g.json", Graph.undirected(2, [(1, 2)]).to_dict())
    wpath = _write(tmp_path, "w.json", {"x": ["1/2", "1/3"]})
    assert main(["construct", "--graph", gpath, "--weights", wpath]) == 2


def test_cli_verify_failure_exits_one(tmp_path, capsys):
    gpath = _write(tmp_path, "g.json", Graph.undirected(2, [(1, 2)]).to_dict())
    spath = _write(
        tmp_path,
        "s.json",
        {"n": 2, "matrices": [[["1", "0"], ["0", "1"]]]},
    )
    assert main(["verify", "--graph", gpath, "--seq", spath]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] is False
    assert report["failures"][0]["check"] == "product"


def test_cli_malformed_file_exits_two(tmp_path, capsys):
    path = _write_text(tmp_path, "g.json", "[1, 2")
    assert main(["analyze", "--graph", path]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_cli_simulate(tmp_path, capsys):
    spath = _write(tmp_path, "s.json", demo_sequence().to_dict())
    xpath = _write(tmp_path, "x.json", {"x": ["1", "0", "0", "0"]})
    gpath = _write(tmp_path, "g.json", demo_graph().to_dict())
    assert main(["simulate", "--seq", spath, "--init", xpath, "--graph", gpath]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["consensus_at"] == 4
    assert data["states"][-1] == ["1/4", "1/4", "1/4", "1/4"]


def test_cli_simulate_approx(tmp_path, capsys):
    spath = _write(tmp_path, "s.json", demo_sequence().to_dict())
    xpath = _write(tmp_path, "x.json", {"x": ["1", "0", "0", "0"]})
    assert main(["simulate", "--seq", spath, "--init", xpath, "--mode", "approx"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["mode"] == "approx"
    assert data["states"][-1] == [0.25, 0.25, 0.25, 0.25]


def test_cli_simulate_length_mismatch_exits_two(tmp_path, capsys):
    spath = _write(tmp_path, "s.json", demo_sequence().to_dict())
    xpath = _write(tmp_path, "x.json", {"x": ["1", "0"]})
    assert main(["simulate", "--seq", spath, "--init", xpath]) == 2


def test_cli_simulate_inconsistent_graph_exits_one(tmp_path, capsys):
    spath = _write(tmp_path, "s.json", demo_sequence().to_dict())
    xpath = _write(tmp_path, "x.json", {"x": ["1", "0", "0", "0"]})
    gpath = _write(tmp_path, "g.json", directed_cycle(4).to_dict())
    assert main(["simulate", "--seq", spath, "--init", xpath, "--graph", gpath]) == 1


def test_cli_analyze_verdicts(tmp_path, capsys):
    dag = _write(tmp_path, "dag.json", Graph.from_arcs(3, [(1, 2), (2, 3)]).to_dict())
    assert main(["analyze", "--graph", dag]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "Infeasible"

    ring = _write(tmp_path, "c4.json", directed_cycle(4).to_dict())
    assert main(["analyze", "--graph", ring]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "Infeasible"

    chord = _write(tmp_path, "chord.json", demo_graph().to_dict())
    assert main(["analyze", "--graph", chord]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "Unknown"
    assert out["reasons"]["even_simple_cycle"] == [1, 3]


def test_cli_analyze_node_limit_exits_two(tmp_path, capsys):
    big = _write(tmp_path, "big.json", {"n": 30, "arcs": []})
    assert main(["analyze", "--graph", big]) == 2
    assert main(["analyze", "--graph", big, "--cycle-node-limit", "30"]) == 0


def test_cli_certificate(tmp_path, capsys):
    gpath = _write(tmp_path, "g.json", demo_graph().to_dict())
    spath = _write(tmp_path, "s.json", demo_sequence().to_dict())
    xpath = _write(tmp_path, "x.json", {"x": ["1", "0", "0", "0"]})
    assert main(["certificate", "--graph", gpath, "--seq", spath, "--init", xpath]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data == {"xstar": "1/4", "walk": [1, 3, 1], "cycle": [1, 3]}


def test_cli_certificate_degenerate(tmp_path, capsys):
    g = Graph.undirected(2, [(1, 2)])
    seq = MatrixSequence(2, (matrix_from_strings([["1/2", "1/2"], ["1/2", "1/2"]]),) * 2)
    gpath = _write(tmp_path, "g.json", g.to_dict())
    spath = _write(tmp_path, "s.json", seq.to_dict())
    xpath = _write(tmp_path, "x.json", {"x": ["1", "0"]})
    assert main(["certificate", "--graph", gpath, "--seq", spath, "--init", xpath]) == 0
    assert json.loads(capsys.readouterr().out) == {"degenerate": True}


def test_cli_certificate_without_consensus_exits_one(tmp_path, capsys):
    gpath = _write(tmp_path, "g.json", Graph.undirected(2, [(1, 2)]).to_dict())
    spath = _write(
        tmp_path, "s.json", {"n": 2, "matrices": [[["1", "0"], ["0", "1"]]]}
    )
    xpath = _write(tmp_path, "x.json", {"x": ["1", "0"]})
    assert main(["certificate", "--graph", gpath, "--seq", spath, "--init", xpath]) == 1


def test_cli_evidence(capsys):
    assert main(["evidence", "--cycle-length", "4", "--trials", "30", "--max-length", "3"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["rank_one_products"] == 0
    assert "not a proof" in data["note"]


def test_cli_evidence_rejects_odd_length(capsys):
    assert main(["evidence", "--cycle-length", "5"]) == 2


def test_cli_demo(capsys):
    assert main(["demo"]) == 0
    assert capsys.readouterr().out == run_demo()


def test_cli_requires_a_command():
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2


def test_module_entry_point_runs_demo():
    runs = [
        subprocess.run(
            [sys.executable, "-m", "ftconsensus", "demo"],
            capture_output=True,
            text=True,
        )
        for _ in range(2)
    ]
    assert all(r.returncode == 0 for r in runs)
    assert runs[0].stdout == runs[1].stdout
    assert "consensus at t=4" in runs[0].stdout
