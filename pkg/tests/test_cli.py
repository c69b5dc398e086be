from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import FIXTURES
from svarpg.cli import run
from svarpg.spectral import cctf, edge_transfer, frequency_grid, spectral_density

GRAPH_A = str(FIXTURES / "graph_a.json")
GRAPH_C = str(FIXTURES / "graph_c.json")


def _run(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_validate_feedback_model(capsys):
    code, out, _ = _run(capsys, "validate", GRAPH_C)
    assert code == 0
    doc = json.loads(out)
    assert doc["grand_sum_below_one"] is False
    assert doc["auto_sums_below_one"] is True
    assert doc["stable"] is True
    assert all(v < 1.0 for v in doc["loop_gain_max"].values())


def test_validate_unstable_model(tmp_path, capsys):
    bad = {
        "observed": ["U"],
        "order": 1,
        "edges": [{"from": "U", "to": "U", "lag": 1, "coeff": 1.3}],
        "noise_var": {"U": 1.0},
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    code, out, _ = _run(capsys, "validate", str(path))
    assert code == 2
    assert json.loads(out)["stable"] is False


def test_semantic_error_exits_2(tmp_path, capsys):
    doc = {
        "observed": ["A"],
        "order": 1,
        "edges": [{"from": "A", "to": "A", "lag": 0, "coeff": 0.5}],
        "noise_var": {"A": 1.0},
    }
    path = tmp_path / "loop.json"
    path.write_text(json.dumps(doc))
    code, _, err = _run(capsys, "validate", str(path))
    assert code == 2
    assert json.loads(err)["error"] == "SemanticError"


def test_usage_error_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["transfer", GRAPH_A, "--from", "X"])  # missing --to
    assert exc.value.code == 1


def test_paths_output(capsys):
    code, out, _ = _run(
        capsys, "paths", GRAPH_C, "--from", "Z", "--to", "Y", "--max-cycle-depth", "1"
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "path"
    assert set(lines[1:]) == {"Z->Y", "Z->X->Y", "Z->Y->X->Y", "Z->X->Y->X->Y"}


def test_transfer_modulus_matches_api(graph_a, capsys):
    code, out, _ = _run(capsys, "transfer", GRAPH_A, "--from", "X", "--to", "Y", "--grid", "64")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "omega,quantity,row,col,re,im,modulus,phase"
    mods = np.array([float(line.split(",")[6]) for line in lines[1:]])
    expected = np.abs(cctf(graph_a, "X", "Y", (), 64).scalar_values())
    assert np.allclose(mods, expected)
    # self-consistency with the product of the two edge functions
    om = frequency_grid(64)
    prod = np.abs(
        edge_transfer(graph_a, "X", "M").evaluate(om)
        * edge_transfer(graph_a, "M", "Y").evaluate(om)
    )
    assert np.allclose(mods, prod)


def test_decompose_by_source_rows(capsys):
    code, out, _ = _run(
        capsys,
        "decompose",
        GRAPH_C,
        "--ancestor",
        "X",
        "--target",
        "Y",
        "--grid",
        "8",
        "--by-source",
    )
    assert code == 0
    lines = out.strip().splitlines()[1:]
    quantities = {line.split(",")[1] for line in lines}
    assert {"causal", "confounding", "residual", "source:Z", "source:X", "source:Y"} <= quantities
    # factor rows total 8 points x 3 factors; source rows add 8 x 3 x 3
    assert len(lines) == 8 * 3 + 8 * 3 * 3


def test_acs_csv(capsys, graph_a):
    code, out, _ = _run(capsys, "acs", GRAPH_A, "--lags", "3")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "lag,row,col,value"
    first = lines[1].split(",")
    assert first[:3] == ["0", "X", "X"]
    assert float(first[3]) == pytest.approx(1.0 / 0.51)


def test_ccf_csv(capsys):
    code, out, _ = _run(capsys, "ccf", GRAPH_A, "--from", "X", "--to", "Y", "--lags", "4")
    values = [float(line.split(",")[3]) for line in out.strip().splitlines()[1:]]
    assert values[:4] == pytest.approx([0.0, 0.0, 0.09, 0.09])


def test_simulate_estimate_round_trip(tmp_path, capsys, graph_a):
    series = tmp_path / "series.csv"
    code, _, _ = _run(
        capsys, "simulate", GRAPH_A, "--length", "32768", "--seed", "5", "-o", str(series)
    )
    assert code == 0
    header = series.read_text().splitlines()[0]
    assert header == "t,X,M,Y"

    spectrum_csv = tmp_path / "spec.csv"
    code, _, _ = _run(
        capsys,
        "estimate",
        str(series),
        "--segment-len",
        "1024",
        "--grid",
        "64",
        "-o",
        str(spectrum_csv),
    )
    assert code == 0
    rows = spectrum_csv.read_text().strip().splitlines()
    assert rows[0] == "omega,quantity,row,col,re,im,modulus,phase"
    assert len(rows) == 1 + 64 * 9
    # diagonal at omega 0 should be in the ballpark of the analytic value
    analytic = spectral_density(graph_a, 64).entry("X", "X")[0].real
    first_xx = [r for r in rows[1:] if r.split(",")[2] == "X" and r.split(",")[3] == "X"][0]
    assert float(first_xx.split(",")[4]) == pytest.approx(analytic, rel=0.5)


def test_identify_from_spectrum_csv(tmp_path, capsys, graph_a):
    spectrum_csv = tmp_path / "s.csv"
    code, _, _ = _run(capsys, "spectral", GRAPH_A, "--grid", "32", "-o", str(spectrum_csv))
    assert code == 0
    code, out, _ = _run(
        capsys,
        "identify",
        GRAPH_A,
        "--method",
        "unconfounded",
        "--target",
        "M",
        "--spectrum",
        str(spectrum_csv),
    )
    assert code == 0
    lines = out.strip().splitlines()[1:]
    got = np.array([complex(float(l.split(",")[4]), float(l.split(",")[5])) for l in lines])
    exact = edge_transfer(graph_a, "X", "M").evaluate(frequency_grid(32))
    assert np.abs(got - exact).max() < 1e-9


def test_transfer_edge_flag(capsys, graph_a):
    code, out, _ = _run(
        capsys, "transfer", GRAPH_A, "--from", "M", "--to", "Y", "--grid", "16", "--edge"
    )
    assert code == 0
    rows = out.strip().splitlines()[1:]
    assert rows[0].split(",")[1] == "H"
    got = np.array([complex(float(r.split(",")[4]), float(r.split(",")[5])) for r in rows])
    exact = edge_transfer(graph_a, "M", "Y").evaluate(frequency_grid(16))
    assert np.allclose(got, exact)


def test_identify_frontdoor_from_model(capsys, confounded_mediator):
    path = str(FIXTURES / "confounded_mediator.json")
    code, out, _ = _run(
        capsys, "identify", path, "--method", "frontdoor", "--labels", "X,W,Y", "--grid", "16"
    )
    assert code == 0
    rows = [r for r in out.strip().splitlines()[1:] if r.split(",")[2:4] == ["W", "Y"]]
    got = np.array([complex(float(r.split(",")[4]), float(r.split(",")[5])) for r in rows])
    exact = edge_transfer(confounded_mediator, "W", "Y").evaluate(frequency_grid(16))
    assert np.abs(got - exact).max() < 1e-10


def test_reruns_are_byte_identical(capsys):
    _, out1, _ = _run(capsys, "spectral", GRAPH_A, "--grid", "16")
    _, out2, _ = _run(capsys, "spectral", GRAPH_A, "--grid", "16")
    assert out1 == out2
