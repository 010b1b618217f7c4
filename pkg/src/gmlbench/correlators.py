"""Time-ordered correlators: exact Heisenberg picture vs the switched S-operator form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .dynamics import (
    IntegratorSettings,
    QuantumModel,
    SwitchingSchedule,
    interaction_propagator,
)
from .errors import DegenerateEigenvalue, EqualTimeFermions, VanishingSExpectation
from .gml import DENOMINATOR_MIN, continued_index, richardson
from .identities import DEGENERACY_TOL, free_eigenstate
from .operators import as_matrix, inner, nondegenerate_gap, spectral_decompose, unitary_exponential

MAX_INSERTIONS = 4


@dataclass(frozen=True, eq=False)
class OperatorInsertion:
    label: str
    matrix: np.ndarray
    time: float
    statistics: Literal["fermionic", "bosonic"] = "bosonic"

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_matrix(self.matrix))
        if not np.isfinite(self.time):
            raise ValueError("insertion time must be finite")
        if self.statistics not in ("fermionic", "bosonic"):
            raise ValueError(f"unknown statistics {self.statistics!r}")

    def scaled(self, factor: complex) -> "OperatorInsertion":
        return OperatorInsertion(self.label, factor * self.matrix, self.time, self.statistics)


@dataclass(frozen=True)
class CorrelatorSpec:
    """Insertions as written (before time ordering) and the H0 eigenstate index."""

    insertions: tuple = ()
    psi0_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "insertions", tuple(self.insertions))
        if len(self.insertions) > MAX_INSERTIONS:
            raise ValueError(f"at most {MAX_INSERTIONS} insertions are supported")


def spec_from_catalog(model: QuantumModel, entries: Sequence[tuple[str, float]],
                      psi0_index: int = 0) -> CorrelatorSpec:
    """Build a spec from ``(operator name, time)`` pairs looked up in the model catalog."""
    ins = []
    for name, time in entries:
        if name not in model.operators:
            raise KeyError(f"operator {name!r} not in the catalog of {model.name} "
                           f"(have: {', '.join(sorted(model.operators))})")
        op = model.operators[name]
        ins.append(OperatorInsertion(name, op.matrix, float(time), op.statistics))
    return CorrelatorSpec(tuple(ins), psi0_index)


def time_order(spec: CorrelatorSpec) -> tuple[list[OperatorInsertion], int]:
    """Sort by descending time; the sign is the parity of the fermionic sub-permutation."""
    ins = list(spec.insertions)
    fermion_times = [x.time for x in ins if x.statistics == "fermionic"]
    if len(set(fermion_times)) != len(fermion_times):
        raise EqualTimeFermions("two fermionic insertions share a time")
    order = sorted(range(len(ins)), key=lambda k: -ins[k].time)
    fermions = [k for k in order if ins[k].statistics == "fermionic"]
    inversions = sum(1 for a in range(len(fermions)) for b in range(a + 1, len(fermions))
                     if fermions[a] > fermions[b])
    return [ins[k] for k in order], -1 if inversions % 2 else 1


def heisenberg_correlator(model: QuantumModel, spec: CorrelatorSpec,
                          eigen_index: int | None = None) -> complex:
    """``sign * <Psi| A1_H(t1) ... An_H(tn) |Psi>`` with exact exponentials of H.

    ``eigen_index`` picks the eigenstate of H; by default the index equals
    ``spec.psi0_index`` (pass the adiabatically continued index when levels cross).
    """
    _check_dims(model, spec)
    ordered, sign = time_order(spec)
    h = model.hamiltonian
    dec = spectral_decompose(h)
    k = spec.psi0_index if eigen_index is None else eigen_index
    if nondegenerate_gap(dec.eigenvalues, k) <= DEGENERACY_TOL:
        raise DegenerateEigenvalue(f"eigenvalue {k} of H is degenerate")
    psi = dec.vector(k).astype(complex)
    vec = psi
    for ins in reversed(ordered):
        a_h = unitary_exponential(h, -ins.time) @ ins.matrix @ unitary_exponential(h, ins.time)
        vec = a_h @ vec
    return sign * inner(psi, vec)


def _check_dims(model, spec):
    for ins in spec.insertions:
        if ins.matrix.shape != (model.dim, model.dim):
            raise ValueError(f"insertion {ins.label} has shape {ins.matrix.shape}, "
                             f"model dim {model.dim}")


@dataclass(frozen=True)
class CorrelatorReport:
    epsilons: tuple
    lhs: complex
    rhs: tuple
    extrapolated_rhs: complex
    deviation: float
    deviations: tuple
    eigen_index: int
    order: float


def _segment_values(model, schedule, settings, ordered, psi0):
    """Numerator and denominator of the S-operator form, plus U_I(0, -T)|psi0>."""
    big_t = schedule.cutoff
    for ins in ordered:
        if not abs(ins.time) < big_t / 2:
            raise ValueError(f"insertion time {ins.time} not inside (-T/2, T/2), T={big_t:.4g}")
    # nodes from the past to the future; insertions sit on nodes and 0 is always one
    events = [(x.time, x) for x in reversed(ordered)]
    nodes = sorted({-big_t, 0.0, big_t, *[x.time for x in ordered]})
    num = psi0.copy()
    den = psi0.copy()
    at_zero = None
    pending = list(events)
    prev = nodes[0]
    for node in nodes[1:]:
        u = interaction_propagator(model, schedule, settings, node, prev).u
        num = u @ num
        den = u @ den
        while pending and pending[0][0] == node:
            x = pending.pop(0)[1]
            a_i = (unitary_exponential(model.h0, -x.time) @ x.matrix
                   @ unitary_exponential(model.h0, x.time))
            num = a_i @ num
        if node == 0.0:
            at_zero = den.copy()
        prev = node
    return inner(psi0, num), inner(psi0, den), at_zero


def gml_correlator(model: QuantumModel, eps_list: Sequence[float], settings: IntegratorSettings,
                   spec: CorrelatorSpec, cutoff_decades: float = 8.0) -> CorrelatorReport:
    """``<psi0|T S A1 ... An|psi0> / <psi0|S|psi0>`` per eps, extrapolated to eps -> 0.

    The Heisenberg side uses the eigenstate of H continued from |psi0> at the
    smallest eps (maximal overlap with U_I(0, -T)|psi0>).
    """
    _check_dims(model, spec)
    eps = tuple(float(e) for e in eps_list)
    ordered, sign = time_order(spec)
    _, psi0 = free_eigenstate(model, spec.psi0_index)
    rhs = []
    continued = None
    for e in eps:
        sched = SwitchingSchedule(e, "symmetric", cutoff_decades)
        num, den, at_zero = _segment_values(model, sched, settings, ordered, psi0)
        if abs(den) <= DENOMINATOR_MIN:
            raise VanishingSExpectation(f"|<psi0|S|psi0>| = {abs(den):.3e} at eps={e}")
        rhs.append(sign * num / den)
        continued = at_zero
    idx = continued_index(model, continued)
    lhs = heisenberg_correlator(model, spec, idx)
    if len(eps) >= 3:
        ex = richardson(eps, np.asarray(rhs, dtype=complex))
        value, order = complex(ex.value), ex.order
    else:
        value, order = rhs[-1], float("nan")
    devs = tuple(abs(lhs - r) for r in rhs)
    return CorrelatorReport(eps, lhs, tuple(rhs), value, abs(lhs - value), devs, idx, order)
