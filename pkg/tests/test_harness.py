import json

import pytest

from slabfpp import cli
from slabfpp.harness import OUT_ENV, ExperimentSpec, SpecError, default_out, run


def _spec(**kw):
    d = {"experiment": "variance-scan", "geometry": {"k": 1, "n_list": [4, 8]}, "p": 0.5, "N": 6, "seed": 3}
    d.update(kw)
    return ExperimentSpec.from_dict(d)


@pytest.mark.parametrize("bad, path", [
    ({"geometry": {"k": 1, "L": "big", "n_list": [4]}}, "$.geometry.L"),
    ({"geometry": {"k": -1, "n_list": [4]}}, "$.geometry.k"),
    ({"p": 1.5}, "$.p"),
    ({"N": 0}, "$.N"),
    ({"colour": "red"}, "$"),
    ({"geometry": {"k": 1, "L": 20, "n_list": [4, 8]}}, "$.geometry.L"),
    ({"geometry": {"k": 1}}, "$.geometry"),
    ({"p": "critical:missing.json"}, "$.p"),
])
def test_spec_errors_name_the_field(bad, path):
    with pytest.raises(SpecError) as exc:
        _spec(**bad)
    assert exc.value.path == path


def test_yaml_round_trip(tmp_path):
    f = tmp_path / "s.yaml"
    f.write_text("experiment: variance-scan\ngeometry: {k: 1, n_list: [4, 8]}\np: 0.5\nN: 6\nseed: 3\n")
    assert ExperimentSpec.load(f).spec_hash == _spec().spec_hash
    f.write_text("- not a mapping\n")
    with pytest.raises(SpecError):
        ExperimentSpec.load(f)


def test_hash_ignores_workers_and_output():
    assert _spec(workers=4, output="x").spec_hash == _spec().spec_hash
    assert _spec(seed=4).spec_hash != _spec().spec_hash


def test_results_independent_of_worker_count(tmp_path):
    spec = _spec(N=8)
    a = run(spec, workers=1, out_dir=tmp_path)
    b = run(spec, workers=3, out_dir=tmp_path)
    assert a.aggregate_hash == b.aggregate_hash and a.aggregate == b.aggregate
    js = json.loads((tmp_path / f"variance-scan_{spec.spec_hash[:10]}.json").read_text())
    assert js["aggregate_hash"] == a.aggregate_hash
    assert (tmp_path / f"variance-scan_{spec.spec_hash[:10]}.csv").read_text().count("\n") == 9


def test_all_closed_gives_zero_variance(tmp_path):
    rec = run(_spec(p=0.0), out_dir=tmp_path)
    assert all(v == 0 for v in rec.aggregate["variances"]) and not rec.aggregate["passes"]


def test_output_env(monkeypatch, tmp_path):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "o"))
    assert default_out() == tmp_path / "o"


def test_cli_exit_codes(tmp_path, capsys):
    out = str(tmp_path)
    assert cli.main(["kappa-rho-audit", "--N", "20", "--out", out]) == 0
    assert json.loads(capsys.readouterr().out)["aggregate"]["all_equal"]
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("experiment: variance-scan\ngeometry: {k: 1, L: 8, n_list: [4]}\n")
    assert cli.main(["variance-scan", "--config", str(cfg), "--out", out]) == 2
    assert "$.geometry.L" in capsys.readouterr().err
    cfg.write_text("experiment: clt-check\ngeometry: {k: 1, n: 4}\n")
    assert cli.main(["variance-scan", "--config", str(cfg)]) == 2
    args = ["variance-scan", "--p", "0", "--N", "6", "--out", out]
    assert cli.main(args) == 0
    assert cli.main(args + ["--strict"]) == 1
