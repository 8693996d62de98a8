import json
import subprocess
import sys
from fractions import Fraction

import pytest

from latfold.cli import main
from latfold.encoders import turn_ancilla
from latfold.encoders.base import EncodedProblem
from latfold.lattice import fold_energy
from latfold.potentials import interaction_matrix, load_potential


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_hpph(capsys):
    code, out, _ = run(capsys, "verify", "--sequence", "HPPH", "--encoding", "turn-ancilla", "--potential", "hp",
                       "--format", "json")
    rec = json.loads(out)
    assert code == 0
    assert rec["result"] == "PASS"
    assert rec["encoder_energy"] == -1 == rec["oracle_energy"]


@pytest.mark.parametrize("encoding", ["turn-circuit", "nested-shell"])
def test_verify_other_encodings(capsys, encoding):
    code, out, _ = run(capsys, "verify", "--sequence", "HPPHP", "--encoding", encoding)
    assert code == 0 and out.strip().endswith("PASS")


def test_verify_mismatch_exit_code(capsys):
    # a penalty far too small lets overlapping folds win
    code, out, _ = run(capsys, "verify", "--sequence", "HHHHHH", "--encoding", "turn-ancilla",
                       "--penalty", "olap=0", "--penalty", "back=0")
    assert code == 1 and "FAIL" in out


def test_encode_dayaqwlk_counts(capsys, tmp_path):
    out_file = tmp_path / "trp.txt"
    code, out, _ = run(capsys, "encode", "--sequence", "DAYAQWLK", "--lattice", "cubic", "--encoding",
                       "turn-ancilla", "--potential", "mj:mj1996.tbl", "-o", str(out_file), "--format", "json")
    assert code == 0
    prob = EncodedProblem.from_text(out_file.read_text())
    assert prob.num_vars == json.loads(out)["num_vars"] == turn_ancilla.qubit_count_formula(8)
    assert prob.registry.counts() == {"turn": 16, "slack": 28, "flag": 9}


def test_stats_paper_numbers(capsys):
    code, out, _ = run(capsys, "stats", "--hits", "4957", "--total", "204800000", "--t-sample-us", "20",
                       "--format", "json")
    rec = json.loads(out)
    assert code == 0
    assert abs(rec["tts_s"] - 3.805) <= 0.001
    assert abs(rec["r99"] - 190262) <= 5


def test_round_trip_encode_solve_decode(capsys, tmp_path):
    mj = load_potential("mj")
    for seq in ("HPPHPH", "KLWDEA"):
        pot = "hp" if set(seq) <= set("HP") else "mj"
        table = load_potential(pot)
        P = interaction_matrix(seq, table)
        f = tmp_path / f"{seq}.txt"
        assert run(capsys, "encode", "--sequence", seq, "--potential", pot, "-o", str(f))[0] == 0
        code, out, _ = run(capsys, "solve", str(f), "--solver", "exhaustive", "--format", "json")
        rec = json.loads(out)
        bits = rec["best"]["bits"]
        code, out, _ = run(capsys, "decode", str(f), "--bits", bits, "--format", "json")
        dec = json.loads(out)["records"][0]
        assert dec["valid"] and dec["fold"]["energy"] == rec["energy"] == dec["energy"]
        assert Fraction(str(rec["energy"])) == fold_energy(
            EncodedProblem.from_text(f.read_text()).decode([int(c) for c in bits]), P)


def test_reduce_then_solve(capsys, tmp_path):
    f, g = tmp_path / "p.txt", tmp_path / "q.txt"
    run(capsys, "encode", "--sequence", "HPPHP", "--encoding", "turn-circuit", "-o", str(f))
    assert run(capsys, "reduce", str(f), "-o", str(g))[0] == 0
    red = EncodedProblem.from_text(g.read_text())
    assert red.polynomial.degree <= 2 and red.reduction
    code, out, _ = run(capsys, "solve", str(g), "--split", "2", "--format", "json")
    rec = json.loads(out)
    assert rec["energy"] == -1 and len(rec["subproblem_minima"]) == 4


def test_solve_sa_and_dump(capsys, tmp_path):
    f, d = tmp_path / "p.txt", tmp_path / "dump.txt"
    run(capsys, "encode", "--sequence", "HPPHPH", "-o", str(f))
    code, out, _ = run(capsys, "solve", str(f), "--solver", "sa", "--samples", "64", "--seed", "3",
                       "--target", "-2", "--max-samples", "6400", "--dump", str(d), "--format", "json")
    rec = json.loads(out)
    assert code == 0 and rec["energy"] == -2
    assert rec["stats"]["hits"] > 0
    lines = d.read_text().splitlines()
    assert len(lines) == rec["stats"]["total"]
    code, out, _ = run(capsys, "decode", str(f), "--samples", str(d), "--format", "json")
    assert len(json.loads(out)["records"]) == len(lines)


def test_outputs_are_byte_deterministic(capsys, tmp_path):
    texts = []
    for name in ("a", "b"):
        f, d = tmp_path / f"{name}.txt", tmp_path / f"{name}.dump"
        run(capsys, "encode", "--sequence", "HPPHP", "-o", str(f))
        run(capsys, "solve", str(f), "--solver", "sa", "--samples", "16", "--seed", "1", "--dump", str(d))
        texts.append((f.read_bytes(), d.read_bytes(), capsys.readouterr().out))
    assert texts[0] == texts[1]


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"sequence": "HPPH", "encoding": "turn-circuit", "format": "json"}))
    code, out, _ = run(capsys, "verify", "--config", str(cfg))
    assert json.loads(out)["encoding"] == "turn-circuit"
    code, out, _ = run(capsys, "verify", "--config", str(cfg), "--encoding", "nested-shell")
    assert json.loads(out)["encoding"] == "nested-shell"


def test_render(capsys, tmp_path):
    f, svg = tmp_path / "p.txt", tmp_path / "fold.svg"
    run(capsys, "encode", "--sequence", "HPPH", "-o", str(f))
    assert run(capsys, "render", str(f), "--bits", "01100", "-o", str(svg))[0] == 0
    text = svg.read_text()
    assert text.startswith("<svg") and "stroke-dasharray" in text
    code, out, _ = run(capsys, "render", str(f), "--bits", "01100", "--ascii")
    assert "z=0" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["encode", "--sequence", "HPH"],
        ["encode", "--sequence", "HPXH"],
        ["encode", "--sequence", "HPPH", "--encoding", "nested-shell", "--lattice", "planar"],
        ["encode"],
        ["solve", "/nonexistent/problem.txt"],
        ["stats", "--hits", "5", "--total", "4"],
    ],
)
def test_invalid_input_exit_code(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    rec = json.loads(err.strip().splitlines()[-1])
    assert set(rec) == {"error", "message"}


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "latfold.cli", "stats", "--hits", "1", "--total", "2"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "r99 7" in out.stdout
