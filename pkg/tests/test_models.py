import itertools
import json
import math
import sys

import numpy as np
import pytest

from conftest import FIXTURES, ORACLES, TWO_LEVEL_G02, load_golden
from gmlbench.errors import DimensionMismatch, NotHermitian, ParseError, TooManyModes
from gmlbench.models import (
    CATALOG,
    diagonal_crossing,
    hubbard_dimer,
    hubbard_mode,
    jordan_wigner,
    load_model,
    model_from_dict,
    model_to_dict,
    random_model,
    save_model,
    two_level,
    two_level_ground_energy,
    validate_model,
)
from gmlbench.operators import ground_state, hermiticity_deviation, max_norm, spectral_decompose

sys.path.insert(0, str(ORACLES))
import hubbard_bruteforce as oracle  # noqa: E402


def anti(a, b):
    return a @ b + b @ a


# --- Jordan-Wigner --------------------------------------------------------


def test_single_mode():
    fa = jordan_wigner(1)
    assert np.array_equal(fa.c(0), [[0, 1], [0, 0]])
    assert np.array_equal(anti(fa.c(0), fa.cdag(0)), np.eye(2))


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_anticommutation_suite(m):
    fa = jordan_wigner(m)
    eye = np.eye(fa.dim)
    for j, k in itertools.product(range(m), repeat=2):
        assert max_norm(anti(fa.c(j), fa.cdag(k)) - (j == k) * eye) <= 1e-12
        assert max_norm(anti(fa.c(j), fa.c(k))) <= 1e-12
        assert max_norm(anti(fa.cdag(j), fa.cdag(k))) <= 1e-12


def test_two_mode_parity_string():
    fa = jordan_wigner(2)
    assert max_norm(anti(fa.c(0), fa.cdag(1))) <= 1e-15
    z = np.diag([1, -1])
    a = np.array([[0, 1], [0, 0]])
    # numpy kron order: the first factor is the most significant bit (mode 1)
    assert np.array_equal(fa.c(0), np.kron(np.eye(2), a))
    assert np.array_equal(fa.c(1), np.kron(a, z))


def test_jordan_wigner_matches_bit_string_signs():
    fa = jordan_wigner(4)
    for k in range(4):
        ref = np.zeros((16, 16))
        for state in range(16):
            res = oracle.annihilate(k, state)
            if res is not None:
                ref[res[1], state] = res[0]
        assert np.array_equal(fa.c(k), ref)


def test_too_many_modes():
    with pytest.raises(TooManyModes):
        jordan_wigner(7)
    with pytest.raises(TooManyModes):
        jordan_wigner(0)


# --- catalog --------------------------------------------------------------


def test_two_level_closed_forms():
    for g, exact in ((0.2, TWO_LEVEL_G02), (0.0, 0.0), (0.5, (1 - math.sqrt(2)) / 2)):
        m = two_level(1.0, g)
        e, _ = ground_state(m.hamiltonian)
        assert abs(e - exact) <= 1e-12
        assert abs(two_level_ground_energy(1.0, g) - exact) <= 1e-15
    assert TWO_LEVEL_G02 == pytest.approx(-0.03851648071, abs=1e-11)


def test_two_level_eigenvectors_closed_form():
    delta, g = 1.0, 0.2
    w = spectral_decompose(two_level(delta, g).hamiltonian)
    root = math.sqrt(delta**2 + 4 * g**2)
    lam = (delta - root) / 2
    vec = np.array([g, lam]) / math.hypot(g, lam)  # (H - lam) v = 0 from the first row
    vec = vec * np.sign(vec[np.argmax(np.abs(vec))])
    assert max_norm(w.vector(0) - vec) <= 1e-12


def test_hubbard_hamiltonian_matches_bit_string_build():
    m = hubbard_dimer(1.0, 2.0)
    ref = np.array(oracle.hamiltonian(1.0, 2.0))
    assert max_norm(m.hamiltonian - ref) <= 1e-15
    assert max_norm(m.h0 - np.array(oracle.hamiltonian(1.0, 0.0))) <= 1e-15


def test_hubbard_spectrum_matches_jacobi_oracle():
    golden = load_golden("golden.json")
    w = spectral_decompose(hubbard_dimer(1.0, 2.0).hamiltonian).eigenvalues
    assert np.max(np.abs(w - golden["eigenvalues"])) <= 1e-10
    assert abs(w[0] - (2 - math.sqrt(20)) / 2) <= 1e-12
    values, _ = oracle.jacobi(oracle.hamiltonian(1.0, 2.0))
    assert np.max(np.abs(np.array(values) - golden["eigenvalues"])) <= 1e-12


def test_hubbard_free_limit_and_number_conservation():
    m = hubbard_dimer(1.0, 0.0)
    assert m.g == 0.0
    e, _ = ground_state(hubbard_dimer(1.0, 2.0).h0)
    assert abs(e + 2.0) <= 1e-12
    m = hubbard_dimer(1.0, 2.0)
    n = m.operators["N"].matrix
    assert max_norm(m.hamiltonian @ n - n @ m.hamiltonian) <= 1e-12


def test_hubbard_catalog():
    m = hubbard_dimer()
    assert hubbard_mode(1, "up") == 0 and hubbard_mode(2, "dn") == 3
    assert m.operators["c1up"].statistics == "fermionic"
    assert m.operators["n2dn"].statistics == "bosonic"
    assert np.array_equal(m.operators["c1up_dag"].matrix, m.operators["c1up"].matrix.conj().T)


def test_random_model_properties():
    a, b = random_model(4, 42), random_model(4, 42)
    assert np.array_equal(a.h0, b.h0) and np.array_equal(a.v, b.v)
    assert hermiticity_deviation(a.v) <= 1e-15
    for seed in range(10):
        m = random_model(5, seed, scale=0.5)
        assert np.min(np.diff(np.diag(m.h0).real)) >= 0.2 * 0.5
        assert np.linalg.norm(m.v, 2) == pytest.approx(0.5)
    assert np.all(random_model(4, 1, real=True).v.imag == 0)


def test_diagonal_crossing():
    m = diagonal_crossing()
    assert np.array_equal(np.diag(m.hamiltonian).real, [2.0, 1.0])
    assert set(CATALOG) == {"two-level", "diagonal-crossing", "hubbard-dimer", "random"}


# --- model files ----------------------------------------------------------


@pytest.mark.parametrize("model", [two_level(1.0, 0.3), random_model(4, 3), hubbard_dimer()])
def test_round_trip(model, tmp_path):
    path = tmp_path / "m.json"
    save_model(model, path)
    back = load_model(path)
    assert np.array_equal(back.h0, model.h0) and np.array_equal(back.v, model.v)
    assert back.g == model.g and back.name == model.name
    for name, op in model.operators.items():
        assert np.array_equal(back.operators[name].matrix, op.matrix)
        assert back.operators[name].statistics == op.statistics


def test_corrupted_fixture():
    data = json.loads((FIXTURES / "corrupted_model.json").read_text())
    diags = validate_model(data)
    assert [d.kind for d in diags] == ["NotHermitian"]
    assert diags[0].field == "v" and diags[0].deviation == pytest.approx(0.25)
    with pytest.raises(NotHermitian) as info:
        model_from_dict(data)
    assert info.value.field == "v"


def test_h0_not_hermitian_reports_field():
    data = model_to_dict(two_level())
    data["h0"][0][1] = [0.5, 0.0]
    with pytest.raises(NotHermitian) as info:
        model_from_dict(data)
    assert info.value.field == "h0" and info.value.deviation == pytest.approx(0.5)


def test_dimension_mismatch():
    data = model_to_dict(two_level())
    data["dim"] = 3
    data["fermion_modes"] = 2
    kinds = {d.kind for d in validate_model(data)}
    assert "DimensionMismatch" in kinds
    with pytest.raises(DimensionMismatch):
        model_from_dict(data)


def test_fermion_term_lists():
    data = {
        "name": "hop", "dim": 4, "fermion_modes": 2, "g": 0.5,
        "h0": {"terms": [{"coeff": [-1, 0], "ops": ["+0", "-1"]},
                         {"coeff": [-1, 0], "ops": ["+1", "-0"]}]},
        "v": {"terms": [{"coeff": [1, 0], "ops": ["+0", "-0", "+1", "-1"]}]},
    }
    m = model_from_dict(data)
    fa = jordan_wigner(2)
    hop = fa.cdag(0) @ fa.c(1)
    assert max_norm(m.h0 + hop + hop.conj().T) <= 1e-15
    assert max_norm(m.v - fa.number(0) @ fa.number(1)) <= 1e-15
    assert "c0" in m.operators and m.operators["c1_dag"].statistics == "fermionic"
    data["h0"]["terms"][0]["ops"] = ["+7"]
    with pytest.raises(ParseError):
        model_from_dict(data)


@pytest.mark.parametrize("data", [
    [], {"dim": 2}, {"dim": "x", "h0": [], "v": [], "g": 0},
    {"dim": 2, "h0": [[1, 2]], "v": [], "g": 0},
    {"dim": 2, "h0": {"terms": []}, "v": {"terms": []}, "g": 0},
])
def test_malformed_inputs_raise_parse_error(data):
    with pytest.raises(ParseError):
        model_from_dict(data)
    assert validate_model(data)[0].kind == "ParseError"


def test_unreadable_files(tmp_path):
    with pytest.raises(ParseError):
        load_model(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_model(bad)
