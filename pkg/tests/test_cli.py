import pytest

from cmcs_splp.cli import main
from cmcs_splp.instance import generate_kg_instance, save_instance
from cmcs_splp.solution import format_solution, objective_of

from oracles import optimum


@pytest.fixture
def inst_file(tmp_path):
    inst = generate_kg_instance("a", 10, 10, seed=2)
    path = tmp_path / "ga10a-x.txt"
    save_instance(inst, path)
    return inst, path


def test_solve_then_verify(inst_file, tmp_path, capsys):
    inst, path = inst_file
    out = tmp_path / "s.sol"
    assert main(["solve", str(path), "--budget-ms", "50", "--deterministic", "-o", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("value ")
    assert int(text.split()[1]) == optimum(inst)
    assert "value" in capsys.readouterr().err
    assert main(["verify", str(path), str(out)]) == 0
    assert "status\tmatch" in capsys.readouterr().out


def test_solve_deterministic_reruns_identically(inst_file, capsys):
    _, path = inst_file
    args = ["solve", str(path), "--budget-ms", "20", "--deterministic", "--seed", "4", "--restarts", "2"]
    main(args)
    first = capsys.readouterr().out
    main(args)
    assert capsys.readouterr().out == first


def test_verify_mismatch_and_errors(inst_file, tmp_path, capsys):
    inst, path = inst_file
    sol = tmp_path / "bad.sol"
    sol.write_text(format_solution(objective_of(inst, [0, 1]) + 1, [0, 1]))
    assert main(["verify", str(path), str(sol)]) == 3
    sol.write_text("value 1\n1 99\n")
    assert main(["verify", str(path), str(sol)]) == 2
    assert main(["verify", str(tmp_path / "missing"), str(sol)]) == 2
    garbage = tmp_path / "g.txt"
    garbage.write_text("hello world\n")
    assert main(["verify", str(garbage), str(sol)]) == 2


def test_usage_errors(inst_file, capsys):
    _, path = inst_file
    assert main(["solve", str(path), "--budget-ms", "0"]) == 1
    assert "budget must be positive" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    assert main(["tune", "--lambda", "1"]) == 1
    assert "no meaningful configurations" in capsys.readouterr().err
    assert main(["solve", str(path), "--config", "paper-7", "--budget-ms", "5"]) == 2


def test_enumerate_count_only(capsys):
    assert main(["enumerate", "--lambda", "2", "--count-only"]) == 0
    assert capsys.readouterr().out == "feasible 1056, meaningful 216\n"


def test_enumerate_dump_is_parseable(tmp_path, capsys):
    out = tmp_path / "all.cfg"
    assert main(["enumerate", "--lambda", "2", "-o", str(out)]) == 0
    assert out.read_text().count("cmcs-config 1") == 216


def test_generate(tmp_path, capsys):
    assert main(["generate", "--class", "c", "--m", "6", "--symmetric", "--seed", "1"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == "6 6"
    assert main(["generate", "--class", "z", "--m", "6"]) == 1


def test_bench(tmp_path, capsys):
    d = tmp_path / "inst"
    d.mkdir()
    for k, name in enumerate(["zz", "aa"]):
        save_instance(generate_kg_instance("b", 8, 8, seed=k), d / name)
    refs = tmp_path / "refs.tsv"
    refs.write_text("aa\t1\n")
    rc = main(["bench", str(d), "--budgets", "5,10", "--seeds", "1,2", "--deterministic",
               "--references", str(refs)])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split("\t") == ["instance", "budget_ms", "seed", "best", "reference", "difference"]
    rows = [ln.split("\t") for ln in lines[1:9]]
    assert [r[0] for r in rows] == ["aa"] * 4 + ["zz"] * 4
    assert all(r[4] == "n/a" for r in rows[4:])
    assert "# worse\t4" in lines
    assert main(["bench", str(d), "--budgets", "5", "--deterministic", "--format", "pretty"]) == 0
    assert "Improved" in capsys.readouterr().out
    assert main(["bench", str(tmp_path / "nope")]) == 2


def test_tune_small(tmp_path, capsys):
    out = tmp_path / "w.cfg"
    args = ["tune", "--pool", "open_best,close_best,open_random(2),close_random(2)",
            "--lambda", "2", "--tests", "8", "--size", "20", "--size-max", "20",
            "--budget-ms", "1", "--threads", "1", "-o", str(out)]
    assert main(args) == 0
    err = capsys.readouterr().err
    assert "second_stage" in err and "meaningful" in err
    first = out.read_text()
    assert main(args) == 0
    assert out.read_text() == first
