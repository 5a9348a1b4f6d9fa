from __future__ import annotations

import io
import json

import pytest

from fermistar import Multivector, random_multivector
from fermistar.verify.cli import main
from fermistar.verify.evaluate import OPERATIONS, EvalError, evaluate, evaluate_document

from helpers import rng_for


def mono(mask, m, **extra):
    return {"m": m, "mode": "formal", "terms": [{"mask": list(mask), "re": 1}], **extra}


def test_star_of_degree_one_pair():
    out = evaluate({"op": "star_k", "args": {
        "f": mono([1], 2), "g": mono([2], 2),
        "K": {"m": 2, "K": [[0, "1/3"], ["-1/3", 0]]}}})
    result = Multivector.from_json(out)
    # a∧b + (hbar/4) Lambda(a, b) with Lambda^{12} = q^{12} + K^{12} = 1/3
    expect = Multivector.from_json({"m": 2, "mode": "formal", "terms": [
        {"mask": [1, 2], "re": 1}, {"mask": [], "laurent": {"1": ["1/12", 0]}}]})
    assert result == expect


def test_berezin_of_top_monomial():
    assert evaluate({"op": "berezin_integral", "args": {"f": mono([1, 2, 3], 3)}}) == 1


def test_supertrace_of_top_clifford_monomial():
    formal = evaluate({"op": "supertrace", "args": {"x": mono([1, 2, 3, 4], 4, algebra="clifford")}})
    assert formal == {"laurent": {"2": [-0.25, 0]}}
    x = {"m": 6, "hbar": 0.5, "algebra": "clifford", "terms": [{"mask": [1, 2, 3, 4, 5, 6], "re": 1}]}
    value = evaluate({"op": "supertrace", "args": {"x": x}})
    assert complex(value["re"], value["im"]) == pytest.approx((0.25j) ** 3)


def test_document_forms():
    req = {"op": "wedge", "args": {"f": mono([1], 2), "g": mono([2], 2)}}
    single = evaluate_document(req)
    assert evaluate_document([req]) == [single]
    assert evaluate_document({"requests": [req, req]}) == [single, single]


@pytest.mark.parametrize("doc, where", [
    ({"requests": [{"op": "nope"}]}, "$.requests[0].op"),
    ({"op": "wedge", "args": {"f": mono([1], 2)}}, "$.args"),
    ({"op": "wedge", "args": {"f": mono([1], 2), "g": mono([2], 2), "h": 1}}, "$.args.h"),
    ({"op": "wedge", "args": {"f": {"m": 2, "terms": [{"mask": [3], "re": 1}]}, "g": mono([2], 2)}},
     "$.args.f"),
    ({"op": "fermi_derivative", "args": {"mu": "x", "f": mono([1], 2)}}, "$.args.mu"),
    ({"requests": {}}, "$.requests"),
    (3, "$"),
])
def test_diagnostics_carry_positions(doc, where):
    with pytest.raises(EvalError) as exc:
        evaluate_document(doc)
    assert str(exc.value).startswith(where)


def test_every_operation_is_documented():
    for name, (params, fn) in OPERATIONS.items():
        assert callable(fn) and all(a.name for a in params), name


def test_json_round_trip_is_stable():
    rng = rng_for(60)
    for formal in (True, False):
        f = random_multivector(4, rng, formal=formal)
        once = evaluate({"op": "wedge", "args": {"f": f.to_json(), "g": Multivector.scalar(1, 4, formal=formal,
                                                                                          hbar=f.hbar or 1.0).to_json()}})
        assert Multivector.from_json(once) == f
        assert Multivector.from_json(once).to_json() == once


def test_cli_eval(tmp_path, capsys, monkeypatch):
    path = tmp_path / "req.json"
    path.write_text(json.dumps({"op": "berezin_integral", "args": {"f": mono([1, 2], 2)}}))
    assert main(["eval", str(path), "--compact"]) == 0
    assert capsys.readouterr().out.strip() == "1"
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps({"op": "nope"})))
    assert main(["eval", "-"]) == 2
    assert "$.op" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["eval", str(bad)]) == 2
    assert main(["eval", str(tmp_path / "absent.json")]) == 2
