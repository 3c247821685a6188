import json

import numpy as np
import pytest

from twinobs import BellMixture, BipartiteState, bell_state
from twinobs.cli import main
from twinobs.fileio import matrix_from_json, matrix_to_json, state_from_json, state_to_json

from conftest import random_density


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 else None), out, err


@pytest.fixture
def files(tmp_path, rng):
    plus, minus = [[1, 0], [0, 0]], [[0, 0], [0, 1]]
    classical_pair = 0.5 * np.diag([1, 0, 0, 1]).astype(complex)
    return {
        "product": write(tmp_path / "product.json",
                         state_to_json(BipartiteState.product(random_density(2, rng), random_density(2, rng)))),
        "bd": write(tmp_path / "bd.json", state_to_json(BellMixture.from_t([1, 0.4, -0.4]).state())),
        "interior": write(tmp_path / "interior.json", state_to_json(BellMixture.from_t([0.5, 0.1, 0.1]).state())),
        "bell": write(tmp_path / "bell.json", state_to_json(bell_state(2))),
        "classical_pair": write(tmp_path / "classical_pair.json", {"d1": 2, "d2": 2, "matrix": matrix_to_json(classical_pair)}),
        "bad": write(tmp_path / "bad.json", {"d1": 2, "d2": 2, "matrix": np.diag([1.2, 0, 0, -0.2]).tolist()}),
        "malformed": write(tmp_path / "malformed.json", {"d1": 2, "matrix": []}),
        "sz": write(tmp_path / "sz.json", {"matrix": [[1, 0], [0, -1]]}),
        "dec2": write(tmp_path / "dec2.json", [{"w": 0.5, "rho1": plus, "rho2": plus},
                                                {"w": 0.5, "rho1": minus, "rho2": minus}]),
        "dec1": write(tmp_path / "dec1.json", [{"w": 1, "rho1": plus, "rho2": minus}]),
        "dec3": write(tmp_path / "dec3.json", [
            {"w": 0.3, "rho1": plus, "rho2": np.diag([1, 0, 0]).tolist()},
            {"w": 0.3, "rho1": plus, "rho2": np.diag([0, 1, 0]).tolist()},
            {"w": 0.4, "rho1": minus, "rho2": np.diag([0, 0, 1]).tolist()},
        ]),
        "dec_bad": write(tmp_path / "dec_bad.json", [{"w": 0.7, "rho1": plus, "rho2": plus}]),
    }


def test_json_round_trip(rng):
    s = BipartiteState(random_density(6, rng), 2, 3)
    back = state_from_json(json.loads(json.dumps(state_to_json(s))))
    assert np.allclose(back.rho, s.rho)
    assert np.allclose(matrix_from_json([[1, [0, 2]], [[0, -2], 3]]), [[1, 2j], [-2j, 3]])


def test_osd_command(capsys, files):
    code, rep, _, _ = run(capsys, ["osd", "--input", files["product"]])
    assert code == 0 and len(rep["results"]["terms"]) == 1
    code, rep, _, _ = run(capsys, ["osd", "--input", files["bd"], "--hermitian"])
    coeffs = [t["coeff"] for t in rep["results"]["terms"]]
    assert np.allclose(coeffs, np.array([1, 1, 0.4, 0.4]) / np.sqrt(2.32))
    assert rep["tolerance"] == 1e-9
    assert len(rep["inputs"]["input"]) == 64
    dec = rep["rank_decisions"][0]
    assert dec["rank"] == 4 and {"smallest_kept", "largest_dropped", "gap"} <= dec.keys()


def test_osd_errors(capsys, files):
    code, _, _, err = run(capsys, ["osd", "--input", files["bad"]])
    assert code == 2 and "eigenvalues" in err
    assert run(capsys, ["osd", "--input", files["malformed"]])[0] == 1
    assert run(capsys, ["osd", "--input", "/nonexistent.json"])[0] == 1
    assert run(capsys, ["osd"])[0] == 3
    assert run(capsys, ["frobnicate"])[0] == 3


def test_twins_command(capsys, files):
    _, rep, _, _ = run(capsys, ["twins", "--input", files["bd"]])
    assert rep["results"]["dim"] == 2 and rep["results"]["nontrivial"]
    assert rep["results"]["gap"] > 1e6
    assert rep["results"]["pairs"][0]["strength"]["kind"] == "strong"
    _, rep, _, _ = run(capsys, ["twins", "--input", files["interior"]])
    assert rep["results"]["dim"] == 1 and not rep["results"]["nontrivial"]
    _, rep, _, _ = run(capsys, ["twins", "--input", files["product"]])
    assert rep["results"]["dim"] == 1


def test_bell_commands(capsys):
    _, rep, _, _ = run(capsys, ["bell", "--t", "1,0.4,-0.4", "classify"])
    res = rep["results"]
    assert res["class"]["kind"] == "binary_nonsinglet" and res["class"]["axis"] == 1
    assert np.allclose(res["weights"], [0, 0.3, 0.7, 0])
    _, rep2, _, _ = run(capsys, ["bell", "classify", "--t=1,0.4,-0.4"])
    assert rep2["results"] == res

    _, rep, _, _ = run(capsys, ["bell", "--weights", "0,0,0,1", "twins"])
    assert "all commuting A1 admit twins" in rep["results"]["family"]["form"]
    assert rep["results"]["sample_pair"]["residual"] < 1e-12
    assert rep["results"]["twin_space_dim"] == 4

    _, rep, _, _ = run(capsys, ["bell", "schmidt", "--t=1,0.4,-0.4"])
    assert rep["results"]["max_coefficient_difference"] < 1e-12

    _, rep, _, _ = run(capsys, ["bell", "sweep", "--grid", "6"])
    by_rank = rep["results"]["by_rank"]
    assert by_rank["1"]["dims"] == {"4": 4}
    assert by_rank["2"]["dims"] == {"2": 30}
    assert by_rank["3"]["dims"] == {"1": 40}
    assert by_rank["4"]["dims"] == {"1": 10}
    assert rep["results"]["all_match"]


def test_bell_errors(capsys):
    code, _, _, err = run(capsys, ["bell", "classify", "--t", "2,0,0"])
    assert code == 1 and "w1" in err
    assert run(capsys, ["bell", "classify", "--weights", "0.5,0.5"])[0] == 1
    assert run(capsys, ["bell", "classify"])[0] == 3
    assert run(capsys, ["bell", "--t", "0,0,0", "classify", "--weights", "0.25,0.25,0.25,0.25"])[0] == 3


def test_info_command(capsys, files):
    _, rep, _, _ = run(capsys, ["info", "--input", files["product"], "--a", files["sz"], "--b", files["sz"]])
    assert rep["results"]["C"] == pytest.approx(0, abs=1e-12)
    _, rep, _, _ = run(capsys, ["info", "--input", files["bell"], "--a", files["sz"], "--b", files["sz"]])
    res = rep["results"]
    assert res["C"] == pytest.approx(2) and res["H"] == pytest.approx(1) and res["lindblad_ok"]
    assert res["perfect_correlation"]["f"] == [[1.0, 1.0], [-1.0, -1.0]]
    _, rep, _, _ = run(capsys, ["info", "--input", files["classical_pair"], "--a", files["sz"], "--b", files["sz"]])
    assert rep["results"]["H"] == pytest.approx(1) and rep["results"]["C"] == pytest.approx(1)
    assert set(rep["inputs"]) == {"input", "a", "b"}


def test_separable_command(capsys, files):
    _, rep, _, _ = run(capsys, ["separable", "--input", files["dec2"]])
    res = rep["results"]
    assert res["components"] == [[0], [1]] and res["nontrivial_twins"]
    assert np.allclose(matrix_from_json(res["twin_projectors"][0]["P1"]), [[1, 0], [0, 0]])
    _, rep, _, _ = run(capsys, ["separable", "--input", files["dec1"]])
    assert rep["results"]["components"] == [[0]] and not rep["results"]["nontrivial_twins"]
    _, rep, _, _ = run(capsys, ["separable", "--input", files["dec3"]])
    assert rep["results"]["components"] == [[0, 1], [2]]
    assert run(capsys, ["separable", "--input", files["dec_bad"]])[0] == 1


def test_reports_are_byte_identical(capsys, files):
    for argv in (["osd", "--input", files["bd"], "--hermitian"], ["twins", "--input", files["bd"]],
                 ["bell", "sweep", "--grid", "4", "--jobs", "3"]):
        a = run(capsys, argv)[2]
        b = run(capsys, argv)[2]
        assert a == b


def test_tolerance_flag_is_echoed(capsys, files):
    _, rep, _, _ = run(capsys, ["twins", "--input", files["bd"], "--tol", "1e-7"])
    assert rep["tolerance"] == 1e-7
