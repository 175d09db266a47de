import csv

import numpy as np
import pytest

from sosforge import bench, cli, pvar


def test_csv_schema_and_records(tmp_path):
    path = tmp_path / "b.csv"
    recs = bench.run_bench("diff", [0, 5, 20], reps=2, csv_path=path)
    assert len(recs) == 6
    assert {(r.representation, r.q) for r in recs} == {(rep, q) for rep in ("dpvar", "pvar") for q in (0, 5, 20)}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        assert next(reader) == ["op", "representation", "q", "wall_time", "peak_nnz", "basis_rows"]
    back = bench.read_csv(path)
    assert [(r.op, r.representation, r.q, r.basis_rows) for r in back] == [
        (r.op, r.representation, r.q, r.basis_rows) for r in recs
    ]
    assert all(r.wall_time >= 0 for r in back)


def test_q_list_must_ascend():
    with pytest.raises(ValueError):
        bench.run_bench("add", [10, 1])
    with pytest.raises(ValueError):
        bench.run_bench("nope", [1])


@pytest.mark.parametrize("op", bench.OPS)
def test_every_op_audits(op):
    recs = bench.run_bench(op, [0, 3, 30], reps=1)
    dp = [r.basis_rows for r in recs if r.representation == "dpvar"]
    assert len(set(dp)) == 1


def test_q0_representations_comparable():
    recs = bench.run_bench("add", [0], reps=9)
    t = {r.representation: r.wall_time for r in recs}
    assert max(t.values()) <= 5 * min(t.values())


def test_flat_add_rows_grow_with_q():
    for q in (2, 10, 40):
        recs = bench.run_bench("add", [q], reps=1)
        rows = {r.representation: r.basis_rows for r in recs}
        # 15 monomials each in x and y; half of eta is shared with xi
        assert rows["pvar"] == 2 * (q + 1) * 15 - (1 + q // 2)
        assert rows["dpvar"] == 2 * 15 - 1


def test_instances_reproducible():
    a, _ = bench.make_instance("diff", 7, np.random.default_rng(3))
    b, _ = bench.make_instance("diff", 7, np.random.default_rng(3))
    assert a == b
    assert pvar.flatten(a).nbar == 8 * 15


def test_cli_parse(capsys):
    assert cli.main(["parse", "(x+1)^2 - x*y"]) == 0
    assert capsys.readouterr().out.strip() == "1 + 2*x - x*y + x^2"


def test_cli_parse_error(capsys):
    assert cli.main(["parse", "x^-1"]) == 2
    assert "offset 2" in capsys.readouterr().err


def test_cli_bench_csv(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SOSFORGE_SEED", "4")
    path = tmp_path / "out.csv"
    assert cli.main(["bench", "--op", "int", "--q", "1,4", "--reps", "1", "--csv", str(path)]) == 0
    assert len(bench.read_csv(path)) == 4
    assert "int" in capsys.readouterr().out


def test_cli_glb_export(tmp_path, capsys):
    path = tmp_path / "glb.dat-s"
    assert cli.main(["glb", "--degree", "2", "--export", str(path)]) == 0
    out = capsys.readouterr().out
    assert "not solved" in out and path.exists()


def test_cli_glb_solve(capsys):
    assert cli.main(["glb", "--degree", "2", "--solve"]) == 0
    assert "status: optimal" in capsys.readouterr().out


def test_cli_localstab_and_robust(capsys):
    assert cli.main(["localstab", "--n", "1"]) == 0
    assert cli.main(["robust", "--n", "1", "--no-solve"]) == 0
    out = capsys.readouterr().out
    assert "problem: localstab" in out and "problem: robust" in out
