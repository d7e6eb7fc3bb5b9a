import json

import pytest
from hypothesis import given, strategies as st

from cfdim import __version__
from cfdim.cli import ExperimentConfig, build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def body(text):
    return "\n".join(l for l in text.splitlines() if not l.startswith("#"))


def test_gauss_exact(capsys):
    code, out, _ = run(capsys, "dim", "gauss-exact", "--seed", "1", "--no-timestamp")
    assert code == 0
    assert abs(float(body(out).splitlines()[1].split(",")[0]) - 2.3731382) < 1e-6


def test_defect(capsys):
    code, out, _ = run(capsys, "measure", "defect", "--b", "1", "--a", "", "--c", "1", "--format", "json", "--seed", "0")
    doc = json.loads(out)
    assert code == 0 and abs(doc["rows"][0]["defect"] - 0.0202526) < 1e-6


def test_header(capsys):
    code, out, _ = run(capsys, "cf", "eval", "--word", "2 3", "--workers", "2", "--seed", "9")
    head = [l for l in out.splitlines() if l.startswith("#")]
    assert f"# version: {__version__}" in head and "# seed: 9" in head and "# workers: 2" in head
    assert any(l.startswith("# timestamp") for l in head)
    assert "3/7" in body(out)


def test_seed_generated_and_recorded(capsys):
    _, out, _ = run(capsys, "process", "sample", "--process", "gauss", "--n", "5", "--samples", "2", "--format", "json")
    doc = json.loads(out)
    assert isinstance(doc["meta"]["seed"], int)
    seed = doc["meta"]["seed"]
    _, again, _ = run(capsys, "process", "sample", "--process", "gauss", "--n", "5", "--samples", "2", "--format", "json",
                      "--seed", str(seed))
    assert json.loads(again)["rows"] == doc["rows"]


@pytest.mark.parametrize("argv", [
    ("process", "sample", "--process", "gauss-markov:2", "--n", "30", "--samples", "2100"),
    ("dim", "entropy", "--k", "2", "--samples", "2100", "--cap", "64"),
    ("dev", "probability", "--n", "25", "--samples", "3000"),
])
def test_determinism_across_workers(capsys, argv):
    bodies = set()
    for w in ("1", "4"):
        code, out, _ = run(capsys, *argv, "--seed", "42", "--workers", w, "--no-timestamp")
        assert code == 0
        bodies.add(body(out))
    assert len(bodies) == 1


def test_error_json(capsys):
    code, out, err = run(capsys, "cf", "cylinder", "--word", "1 0")
    assert code == 1 and out == ""
    assert json.loads(err)["error"] == "invalid_digit"
    code, _, err = run(capsys, "fexp", "obstruction", "--scheme", "base-2", "--density", "lebesgue", "--a", "5")
    assert code == 1 and json.loads(err)["error"] == "branch_out_of_range"
    code, _, err = run(capsys, "process", "build", "--process", "nonsense")
    assert code == 1 and json.loads(err)["error"] == "config_error"


def test_config_overrides_flags(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 5, "format": "json", "params": {"n": 3}}))
    code, out, _ = run(capsys, "cf", "digits", "--x", "0.3183", "--n", "9", "--config", str(cfg))
    doc = json.loads(out)
    assert code == 0 and doc["meta"]["seed"] == 5 and doc["rows"][0]["digits"] == [3, 7, 17]
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(capsys, "cf", "digits", "--x", "1/3", "--config", str(cfg))
    assert code == 1 and json.loads(err)["error"] == "config_error"


def test_output_file(capsys, tmp_path):
    path = tmp_path / "out.csv"
    code, out, _ = run(capsys, "dev", "decay", "--samples", "2000", "--seed", "1", "--output", str(path), "--no-timestamp")
    assert code == 0 and out == ""
    rows = body(path.read_text()).splitlines()
    assert rows[0].startswith("n,estimate,stderr,samples") and len(rows) == 6


@pytest.mark.parametrize("argv", [
    ("cf", "digits", "--x", "2/3"),
    ("cf", "digits", "--x", "0.41421356237309504880168872", "--precision", "80", "--n", "5"),
    ("cf", "cylinder", "--word", "1,2"),
    ("measure", "cylinder", "--word", "1 1"),
    ("measure", "ratio", "--u", "1", "--v", "2"),
    ("measure", "witness", "--k", "1", "--max-digit", "2"),
    ("process", "build", "--process", "iid:1,2"),
    ("process", "mass", "--process", "gauss-markov:1", "--word", "1 1"),
    ("process", "stationarity", "--k", "1", "--d", "1", "--cap", "100"),
    ("process", "psiratio", "--k", "1", "--u", "1 1", "--v", "2 2"),
    ("process", "psiratio", "--k", "1", "--max-len", "3"),
    ("dim", "entropy", "--process", "iid:1,2", "--n", "200", "--samples", "20"),
    ("dim", "lyapunov", "--n", "200", "--samples", "20"),
    ("dim", "kp", "--n", "200", "--samples", "20"),
    ("dim", "gap", "--k", "3", "--outer-samples", "200", "--cap", "64", "--lyap-n", "200", "--lyap-samples", "20"),
    ("dim", "local", "--n", "200", "--samples", "20"),
    ("dev", "frequency", "--path", "1 2 1 2 1 2", "--a", "1 2", "--n", "4"),
    ("dev", "gamma-mass", "--process", "point:1", "--n", "20", "--samples", "10"),
    ("fexp", "digits", "--scheme", "base-2", "--x", "1/3", "--n", "6"),
    ("fexp", "ulam", "--scheme", "base-2", "--bins", "32"),
    ("fexp", "conditions", "--scheme", "base-3"),
    ("fexp", "obstruction", "--density", "ulam", "--bins", "128"),
])
def test_every_subcommand_runs(capsys, argv):
    for fmt in ("csv", "json"):
        code, out, err = run(capsys, *argv, "--seed", "3", "--format", fmt)
        assert code == 0, err
        if fmt == "json":
            assert json.loads(out)["rows"]


def test_precision_digits(capsys):
    _, out, _ = run(capsys, "cf", "digits", "--x", "0.41421356237309504880168872", "--precision", "80", "--n", "5",
                    "--format", "json", "--seed", "0")
    assert json.loads(out)["rows"][0]["digits"] == [2, 2, 2, 2, 2]


def test_help_texts_name_topics():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0]
    for name, group in sub.choices.items():
        assert group.description
        for action in group._subparsers._group_actions[0].choices.values():
            assert action.description and len(action.description) > 15


def test_repro_subset(capsys):
    code, out, err = run(capsys, "repro", "all", "--only", "4,6,9,10", "--seed", "42", "--no-timestamp", "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == 0 and [r["status"] for r in rows] == ["pass"] * 4
    assert err.count("[pass]") == 4


configs = st.builds(
    ExperimentConfig,
    command=st.sampled_from(["dim entropy", "dev decay", "fexp ulam"]),
    params=st.dictionaries(st.sampled_from(["k", "n", "samples", "delta", "word", "q", "bins", "tol"]),
                           st.one_of(st.integers(-10**6, 10**6), st.floats(allow_nan=False, allow_infinity=False),
                                     st.text(max_size=8), st.none())),
    seed=st.one_of(st.none(), st.integers(0, 2**32 - 1)),
    workers=st.integers(1, 8),
    output=st.one_of(st.none(), st.text(min_size=1, max_size=10)),
    format=st.sampled_from(["csv", "json"]),
    no_timestamp=st.booleans(),
)


@given(configs)
def test_config_roundtrip(cfg):
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg
    assert cfg.with_seed().seed is not None
