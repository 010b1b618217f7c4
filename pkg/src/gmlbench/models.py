"""Model catalog, Jordan-Wigner fermions and JSON model files.

Model file schema (JSON, UTF-8)::

    {
      "name": "two-level",
      "dim": 2,
      "h0": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]],     # rows of [re, im]
      "v":  [[[0, 0], [1, 0]], [[1, 0], [0, 0]]],
      "g": 0.2,
      "fermion_modes": 2,                              # optional, dim == 2**m
      "operators": {"sx": {"matrix": [...], "statistics": "bosonic"}},
      "correlator": {"psi0_index": 0,
                     "insertions": [{"op": "c0", "time": 0.5}]}
    }

With ``fermion_modes`` present, ``h0`` and ``v`` may instead be term lists
``{"terms": [{"coeff": [re, im], "ops": ["+0", "-1"]}, ...]}`` where ``"+k"``
creates and ``"-k"`` annihilates mode k; the annihilators ``c<k>`` and
creators ``c<k>_dag`` are then added to the operator catalog.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, NamedTuple

import numpy as np

from .dynamics import QuantumModel
from .errors import DimensionMismatch, NotHermitian, ParseError, TooManyModes
from .operators import HERMITIAN_RTOL, hermiticity_deviation, max_norm

Statistics = Literal["fermionic", "bosonic"]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class CatalogOperator(NamedTuple):
    matrix: np.ndarray
    statistics: Statistics = "bosonic"


@dataclass(frozen=True)
class FermionAlgebra:
    """Annihilators ``c[k]`` on the 2**m Fock space; mode 0 is the least significant bit."""

    modes: int
    annihilators: tuple

    @property
    def dim(self) -> int:
        return 2**self.modes

    def c(self, k: int) -> np.ndarray:
        return self.annihilators[k]

    def cdag(self, k: int) -> np.ndarray:
        return self.annihilators[k].conj().T

    def number(self, k: int) -> np.ndarray:
        return self.cdag(k) @ self.c(k)


def jordan_wigner(m: int) -> FermionAlgebra:
    """``c_k = I x ... x a x Z x ... x Z`` with k parity factors Z on the lower modes."""
    if not 1 <= m <= 6:
        raise TooManyModes(f"jordan_wigner supports 1..6 modes, got {m}")
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    ops = []
    for k in range(m):
        factors = [eye] * (m - 1 - k) + [a] + [SIGMA_Z] * k
        mat = np.ones((1, 1), dtype=complex)
        for f in factors:
            mat = np.kron(mat, f)
        mat.setflags(write=False)
        ops.append(mat)
    return FermionAlgebra(m, tuple(ops))


def two_level_ground_energy(delta: float, g: float) -> float:
    return (delta - math.sqrt(delta**2 + 4 * g**2)) / 2


def two_level(delta: float = 1.0, g: float = 0.2) -> QuantumModel:
    """H0 = diag(0, delta), V = sigma_x."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    ops = {"sigma_x": CatalogOperator(SIGMA_X), "sigma_z": CatalogOperator(SIGMA_Z)}
    return QuantumModel(np.diag([0.0, delta]).astype(complex), SIGMA_X, g, "two-level", ops)


def diagonal_crossing(g: float = 1.0) -> QuantumModel:
    """H0 = diag(0, 1), V = diag(2, 0): levels cross at g = 1/2 without mixing."""
    ops = {"sigma_z": CatalogOperator(SIGMA_Z)}
    return QuantumModel(np.diag([0.0, 1.0]).astype(complex), np.diag([2.0, 0.0]).astype(complex),
                        g, "diagonal-crossing", ops)


HUBBARD_SPINS = ("up", "dn")


def hubbard_mode(site: int, spin: str) -> int:
    """Mode index for sites 1, 2 and spins 'up', 'dn'."""
    return 2 * (site - 1) + HUBBARD_SPINS.index(spin)


def hubbard_dimer(t_hop: float = 1.0, u: float = 2.0, g_scale: float = 1.0) -> QuantumModel:
    """Two-site Hubbard model: hopping in H0, V = sum_i n_iup n_idn, g = g_scale * u."""
    fa = jordan_wigner(4)
    h0 = np.zeros((16, 16), dtype=complex)
    v = np.zeros((16, 16), dtype=complex)
    for spin in HUBBARD_SPINS:
        a, b = hubbard_mode(1, spin), hubbard_mode(2, spin)
        hop = fa.cdag(a) @ fa.c(b)
        h0 -= t_hop * (hop + hop.conj().T)
    for site in (1, 2):
        v += fa.number(hubbard_mode(site, "up")) @ fa.number(hubbard_mode(site, "dn"))
    ops = {}
    for site in (1, 2):
        for spin in HUBBARD_SPINS:
            k = hubbard_mode(site, spin)
            ops[f"c{site}{spin}"] = CatalogOperator(fa.c(k), "fermionic")
            ops[f"c{site}{spin}_dag"] = CatalogOperator(fa.cdag(k), "fermionic")
            ops[f"n{site}{spin}"] = CatalogOperator(fa.number(k), "bosonic")
    ops["N"] = CatalogOperator(sum(fa.number(k) for k in range(4)), "bosonic")
    return QuantumModel(h0, v, g_scale * u, "hubbard-dimer", ops)


def random_model(dim: int, seed: int, scale: float = 1.0, g: float = 1.0,
                 real: bool = False) -> QuantumModel:
    """Random real diagonal H0 with minimum level gap >= 0.2*scale and Hermitian V, |V|_2 = scale."""
    if not 2 <= dim <= 16:
        raise ValueError("random_model supports 2 <= dim <= 16")
    rng = np.random.default_rng(seed)
    for _ in range(100_000):
        levels = np.sort(rng.uniform(0.0, dim * scale, size=dim))
        if np.min(np.diff(levels)) >= 0.2 * scale:
            break
    else:  # pragma: no cover
        raise RuntimeError("could not draw a gapped spectrum")
    a = rng.normal(size=(dim, dim))
    if not real:
        a = a + 1j * rng.normal(size=(dim, dim))
    v = (a + a.conj().T) / 2
    v = v * (scale / np.linalg.norm(v, 2))
    name = f"random-{dim}-{seed}" + ("-real" if real else "")
    return QuantumModel(np.diag(levels).astype(complex), v.astype(complex), g, name)


CATALOG = {
    "two-level": two_level,
    "diagonal-crossing": diagonal_crossing,
    "hubbard-dimer": hubbard_dimer,
    "random": random_model,
}


# ---------------------------------------------------------------------------
# model files


class Diagnostic(NamedTuple):
    kind: str
    field: str
    message: str
    deviation: float = 0.0


def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _decode_matrix(raw, field: str) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{field}: not a matrix of [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ParseError(f"{field}: expected square array of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _term_matrix(spec, fa: FermionAlgebra, field: str) -> np.ndarray:
    out = np.zeros((fa.dim, fa.dim), dtype=complex)
    try:
        terms = spec["terms"]
        for i, term in enumerate(terms):
            re, im = term["coeff"]
            mat = np.eye(fa.dim, dtype=complex)
            for op in term["ops"]:
                kind, k = op[0], int(op[1:])
                if not 0 <= k < fa.modes or kind not in "+-":
                    raise ParseError(f"{field}.terms[{i}]: bad operator {op!r}")
                mat = mat @ (fa.cdag(k) if kind == "+" else fa.c(k))
            out += complex(re, im) * mat
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"{field}: malformed term list ({exc})") from exc
    return out


def _operator_matrix(data: dict, field: str, fa: FermionAlgebra | None) -> np.ndarray:
    raw = data.get(field)
    if raw is None:
        raise ParseError(f"missing field {field!r}")
    if isinstance(raw, dict):
        if fa is None:
            raise ParseError(f"{field}: term lists need fermion_modes")
        return _term_matrix(raw, fa, field)
    return _decode_matrix(raw, field)


def _check_hermitian(m: np.ndarray, field: str, out: list):
    dev = hermiticity_deviation(m)
    if dev > HERMITIAN_RTOL * (1 + max_norm(m)):
        out.append(Diagnostic("NotHermitian", field, f"{field} deviates from its adjoint by {dev:.3e}",
                              dev))


def _decoded(data: dict):
    """Parse a model dict; returns (fields, diagnostics). Raises ParseError on malformed input."""
    if not isinstance(data, dict):
        raise ParseError("model file must contain a JSON object")
    diags: list[Diagnostic] = []
    for key in ("dim", "h0", "v", "g"):
        if key not in data:
            raise ParseError(f"missing field {key!r}")
    try:
        dim = int(data["dim"])
        g = float(data["g"])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"dim/g not numeric ({exc})") from exc
    fa = None
    modes = data.get("fermion_modes")
    if modes is not None:
        modes = int(modes)
        if 2**modes != dim:
            diags.append(Diagnostic("DimensionMismatch", "fermion_modes",
                                    f"2**{modes} = {2**modes} != dim {dim}"))
        else:
            fa = jordan_wigner(modes)
    h0 = _operator_matrix(data, "h0", fa)
    v = _operator_matrix(data, "v", fa)
    for field, m in (("h0", h0), ("v", v)):
        if m.shape[0] != dim:
            diags.append(Diagnostic("DimensionMismatch", field, f"{field} is {m.shape[0]}x{m.shape[0]}, dim {dim}"))
        elif not np.all(np.isfinite(m)):
            diags.append(Diagnostic("ParseError", field, f"{field} has non-finite entries"))
        else:
            _check_hermitian(m, field, diags)
    ops: dict[str, CatalogOperator] = {}
    if fa is not None:
        for k in range(fa.modes):
            ops[f"c{k}"] = CatalogOperator(fa.c(k), "fermionic")
            ops[f"c{k}_dag"] = CatalogOperator(fa.cdag(k), "fermionic")
    for name, entry in (data.get("operators") or {}).items():
        field = f"operators.{name}"
        if not isinstance(entry, dict) or "matrix" not in entry:
            raise ParseError(f"{field}: expected {{'matrix': ..., 'statistics': ...}}")
        mat = _decode_matrix(entry["matrix"], field)
        stats = entry.get("statistics", "bosonic")
        if stats not in ("fermionic", "bosonic"):
            raise ParseError(f"{field}: statistics must be 'fermionic' or 'bosonic'")
        if mat.shape[0] != dim:
            diags.append(Diagnostic("DimensionMismatch", field, f"{mat.shape[0]} != dim {dim}"))
        ops[name] = CatalogOperator(mat, stats)
    fields = dict(name=str(data.get("name", "model")), h0=h0, v=v, g=g, operators=ops)
    return fields, diags


def validate_model(data: dict) -> list[Diagnostic]:
    """Every violated invariant of a parsed model file, with its location."""
    try:
        _, diags = _decoded(data)
    except ParseError as exc:
        return [Diagnostic("ParseError", "", str(exc))]
    return diags


def model_from_dict(data: dict) -> QuantumModel:
    fields, diags = _decoded(data)
    for d in diags:
        if d.kind == "NotHermitian":
            raise NotHermitian(d.deviation, d.field)
        if d.kind == "DimensionMismatch":
            raise DimensionMismatch(f"{d.field}: {d.message}")
        raise ParseError(f"{d.field}: {d.message}")
    return QuantumModel(**fields)


def read_model_file(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read model file {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def load_model(path: str | Path) -> QuantumModel:
    return model_from_dict(read_model_file(path))


def model_to_dict(model: QuantumModel) -> dict:
    data = {
        "name": model.name,
        "dim": model.dim,
        "h0": _encode_matrix(model.h0),
        "v": _encode_matrix(model.v),
        "g": model.g,
    }
    if model.operators:
        data["operators"] = {
            name: {"matrix": _encode_matrix(op.matrix), "statistics": op.statistics}
            for name, op in model.operators.items()
        }
    return data


def save_model(model: QuantumModel, path: str | Path):
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")
