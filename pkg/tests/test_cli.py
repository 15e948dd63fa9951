import io
import json
import subprocess
import sys

import pytest

from groupsos import serialize as ser
from groupsos.cli import REPRODUCE_IDS, run_command


def _problem(task, payload, group=None, settings=None):
    return {"format_version": 1, "group": group or {"kind": "abelian", "moduli": [0]}, "task": task,
            "payload": payload, "settings": settings or {}}


def _elem(terms, n=1):
    return {"n": n, "terms": [{"g": g, "coeff": c} for g, c in terms]}


SQ = _problem("sos-check", {"element": _elem([([0], 2), ([1], 1), ([-1], 1)]), "sigma": [[0], [1]]})


def _run(tmp_path, problem, cmd="check", extra=()):
    p = tmp_path / "p.json"
    p.write_text(json.dumps(problem))
    buf = io.StringIO()
    rc = run_command([cmd, "--in", str(p), *extra], buf)
    return rc, buf.getvalue()


def test_check_inside_and_verify(tmp_path):
    out = tmp_path / "c.json"
    rc, text = _run(tmp_path, SQ, extra=("--out", str(out)))
    assert rc == 0 and "verdict: inside" in text
    assert run_command(["verify", "--in", str(out)], io.StringIO()) == 0


def test_tampered_gram_fails_verification(tmp_path):
    out = tmp_path / "c.json"
    _run(tmp_path, SQ, extra=("--out", str(out)))
    d = json.loads(out.read_text())
    d["certificates"]["gram"]["gram"]["real"][0][1] = 0.5
    d["certificates"]["gram"]["gram"]["real"][1][0] = 0.5
    out.write_text(json.dumps(d))
    buf = io.StringIO()
    assert run_command(["verify", "--in", str(out)], buf) == 1
    assert "FAIL" in buf.getvalue()


def test_json_output(tmp_path):
    rc, text = _run(tmp_path, SQ, extra=("--format", "json"))
    d = json.loads(text)
    assert rc == 0 and d["verdict"] == "inside"
    assert d["verification"] and all(c["passed"] for c in d["verification"])


def test_outside_exit_zero(tmp_path):
    prob = _problem("sos-check", {"element": _elem([([0], 1), ([1], [0.5, 0.5]), ([3], [0.5, -0.5])]),
                                  "sigma": [[0], [1]]}, {"kind": "abelian", "moduli": [4]})
    rc, text = _run(tmp_path, prob)
    assert rc == 0 and "verdict: outside" in text


def test_factor_and_negative_symbol(tmp_path):
    rc, text = _run(tmp_path, _problem("sos-factor", {"element": _elem([([0], 2), ([1], 1), ([-1], 1)])}),
                    "factor")
    assert rc == 0 and "factored" in text
    out = tmp_path / "neg.json"
    rc, text = _run(tmp_path, _problem("sos-factor", {"element": _elem([([0], 1), ([1], 1), ([-1], 1)])}),
                    "factor", ("--out", str(out)))
    assert rc == 0 and "symbol_negative" in text
    assert run_command(["verify", "--in", str(out)], io.StringIO()) == 0


def test_extend_pauli(tmp_path):
    I = {"rows": 2, "cols": 2, "real": [[1, 0], [0, 1]], "imag": [[0, 0], [0, 0]]}
    X = {"rows": 2, "cols": 2, "real": [[0, 1], [1, 0]], "imag": [[0, 0], [0, 0]]}
    Zm = {"rows": 2, "cols": 2, "real": [[1, 0], [0, -1]], "imag": [[0, 0], [0, 0]]}
    vals = [{"g": g, "value": v} for g, v in [([0, 0], I), ([1, 0], X), ([-1, 0], X), ([0, 1], Zm), ([0, -1], Zm)]]
    rc, text = _run(tmp_path, _problem("extend", {"values": vals}, {"kind": "abelian", "moduli": [0, 0]}),
                    "extend")
    assert rc == 0 and "not_extendable" in text


def test_wrong_command_for_task(tmp_path):
    rc, _ = _run(tmp_path, SQ, "extend")
    assert rc == 2


def test_unknown_field_rejected(tmp_path, capsys):
    bad = dict(SQ, extra=1)
    rc, _ = _run(tmp_path, bad)
    assert rc == 2 and "extra" in capsys.readouterr().err
    bad = _problem("sos-check", dict(SQ["payload"], colour="red"))
    rc, _ = _run(tmp_path, bad)
    assert rc == 2 and "colour" in capsys.readouterr().err


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "p.json"
    p.write_text("{not json")
    assert run_command(["check", "--in", str(p)], io.StringIO()) == 2
    assert "line 1" in capsys.readouterr().err


def test_hermitian_error_names_gamma(tmp_path, capsys):
    prob = _problem("extend", {"values": [{"g": [0], "value": 1}, {"g": [1], "value": 0.5},
                                          {"g": [-1], "value": 0.25}]})
    rc, _ = _run(tmp_path, prob, "extend")
    err = capsys.readouterr().err
    assert rc == 2 and "gamma=<1>" in err
    prob = _problem("sos-check", {"element": _elem([([0], 2), ([1], 1), ([-1], 0.5)]), "sigma": [[0], [1]]})
    rc, _ = _run(tmp_path, prob)
    assert rc == 2 and "gamma=<1>" in capsys.readouterr().err


def test_free_word_canonicalized_with_warning(tmp_path, capsys):
    prob = _problem("sos-check", {"element": _elem([([], 2), ([1, -1, 2], 1), ([-2], 1)]), "sigma": [[], [2]]},
                    {"kind": "free", "rank": 2})
    rc, text = _run(tmp_path, prob)
    assert rc == 0 and "inside" in text
    assert "reduced to [2]" in capsys.readouterr().err


def test_parse_problem_reports_field():
    with pytest.raises(ser.ProblemError) as exc:
        ser.parse_problem(_problem("sos-check", {"element": _elem([([0], 1)])}))
    assert exc.value.field == "payload"


def test_bad_arguments_exit_two():
    assert run_command(["reproduce", "no-such-id"], io.StringIO()) == 2
    assert run_command(["check"], io.StringIO()) == 2


@pytest.mark.parametrize("rid", REPRODUCE_IDS)
def test_reproduce_ids_verify_and_are_deterministic(tmp_path, rid):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    extra = ("--trials", "3") if rid == "rudin-gap-search" else ()
    assert run_command(["reproduce", rid, "--out", str(a), *extra], io.StringIO()) == 0
    assert run_command(["reproduce", rid, "--out", str(b), *extra], io.StringIO()) == 0
    assert a.read_bytes() == b.read_bytes()
    assert run_command(["verify", "--in", str(a)], io.StringIO()) == 0


def test_module_entry_point(tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps(SQ))
    r = subprocess.run([sys.executable, "-m", "groupsos", "check", "--in", str(p), "--format", "json"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["verdict"] == "inside"
