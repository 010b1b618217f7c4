"""Gell-Mann--Low vectors, energy shifts and adiabatic sweeps.

All asymptotic quantities use the symmetric switching profile with the
infinite times replaced by the cutoff T(eps) of the schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .dynamics import (
    IntegratorSettings,
    QuantumModel,
    SwitchingSchedule,
    UnitaryMap,
    interaction_propagator,
    tracked_path,
)
from .errors import (
    BranchJump,
    NonConvergent,
    NonRealModel,
    VanishingDenominator,
    VanishingSExpectation,
)
from .identities import (
    ZERO_COUPLING,
    DerivativeSettings,
    asymptotic_state,
    free_eigenstate,
    tolerances,
)
from .operators import inner, is_real, spectral_decompose

Sign = Literal["+", "-"]
DENOMINATOR_MIN = 1e-12
_BRANCH_LIMIT = math.pi / 2
_BRANCH_RETRIES = 3


# ---------------------------------------------------------------------------
# extrapolation


class Extrapolation(NamedTuple):
    value: complex | float
    uncertainty: float
    order: float


def _fit_order(eps: np.ndarray, ratio: float) -> float:
    """Solve (e1^p - e2^p) / (e2^p - e3^p) = ratio for p > 0."""
    e1, e2, e3 = eps
    q1, q2 = e1 / e2, e2 / e3
    if abs(q1 - q2) <= 1e-12 * q1:
        return math.log(ratio) / math.log(q1)

    def f(p):
        return (e1**p - e2**p) / (e2**p - e3**p) - ratio

    lo, hi = 1e-9, 50.0
    if f(lo) >= 0:
        return 0.0
    if f(hi) <= 0:
        return math.inf
    return brentq(f, lo, hi, xtol=1e-14)


def _extrapolate_triple(eps: np.ndarray, vals: np.ndarray) -> tuple:
    d1, d2 = vals[0] - vals[1], vals[1] - vals[2]
    tiny = 1e-13 * (1.0 + float(np.max(np.abs(vals))))
    if abs(d1) <= tiny and abs(d2) <= tiny:
        return vals[2], math.nan
    if abs(d2) <= tiny:
        return vals[2], math.inf
    r = d1 / d2
    if np.iscomplexobj(vals):
        r = abs(r)
    elif r <= 0:
        raise NonConvergent(f"sequence {vals.tolist()} is not monotone in eps")
    p = _fit_order(eps, float(r))
    if not p > 0:
        raise NonConvergent(f"fitted order {p:.3g} <= 0 for sequence {vals.tolist()}")
    if math.isinf(p):
        return vals[2], p
    e2p, e3p = eps[1] ** p, eps[2] ** p
    c = d2 / (e2p - e3p)
    return vals[2] - c * e3p, p


def richardson(eps: Sequence[float], values: Sequence) -> Extrapolation:
    """Extrapolate ``values(eps)`` to eps -> 0 assuming ``v + c eps**p``.

    The order p is fitted from the last three points. The uncertainty is the
    change against the previous estimate: the extrapolant of the preceding
    triple when there are four or more points, the last raw value otherwise.
    """
    eps = np.asarray(eps, dtype=float)
    vals = np.asarray(values)
    if len(eps) < 3 or len(eps) != len(vals):
        raise ValueError("need at least three (eps, value) pairs")
    if np.any(np.diff(eps) >= 0) or np.any(eps <= 0):
        raise ValueError("eps must be positive and strictly decreasing")
    value, p = _extrapolate_triple(eps[-3:], vals[-3:])
    if len(eps) >= 4:
        prev, _ = _extrapolate_triple(eps[-4:-1], vals[-4:-1])
    else:
        prev = vals[-1]
    return Extrapolation(value, float(abs(value - prev)), p)


# ---------------------------------------------------------------------------
# Gell-Mann--Low vectors


@dataclass(frozen=True, eq=False)
class GmlVector:
    sign: Sign
    epsilon: float
    raw: np.ndarray
    denominator: complex
    ratio: np.ndarray
    energy: float
    energy_complex: complex
    psi0: np.ndarray = field(repr=False)
    psi0_energy: float = 0.0
    psi0_index: int = 0
    model: QuantumModel | None = field(default=None, repr=False)
    schedule: SwitchingSchedule | None = field(default=None, repr=False)
    settings: IntegratorSettings | None = field(default=None, repr=False)

    @property
    def energy_imag(self) -> float:
        return self.energy_complex.imag


def _check_sign(sign):
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def _schedule(schedule: SwitchingSchedule) -> SwitchingSchedule:
    if schedule.branch != "symmetric":
        raise ValueError("GML constructions use the symmetric switching branch")
    return schedule


def _denominator(psi0, raw) -> complex:
    den = inner(psi0, raw)
    if abs(den) <= DENOMINATOR_MIN:
        raise VanishingDenominator(f"|<psi0|U_I|psi0>| = {abs(den):.3e}")
    return den


def gml_vector(model: QuantumModel, schedule: SwitchingSchedule, settings: IntegratorSettings,
               psi0_index: int = 0, sign: Sign = "-", psi0: np.ndarray | None = None) -> GmlVector:
    """``U_I(0, +-T)|psi0> / <psi0|U_I(0, +-T)|psi0>`` and its energy ``<psi0|H|ratio>``.

    ``psi0`` overrides the H0 eigenvector (it must be that eigenvector up to a phase).
    """
    _check_sign(sign)
    schedule = _schedule(schedule)
    e0, vec0 = free_eigenstate(model, psi0_index)
    if psi0 is not None:
        vec0 = np.asarray(psi0, dtype=complex)
    raw = asymptotic_state(model, schedule, settings, vec0, sign)
    den = _denominator(vec0, raw)
    ratio = raw / den
    e = inner(vec0, model.hamiltonian @ ratio)
    return GmlVector(sign, schedule.epsilon, raw, den, ratio, e.real, e, vec0, e0, psi0_index,
                     model, schedule, settings)


def _ratio_at(model, schedule, settings, psi0, sign, g) -> np.ndarray:
    raw = asymptotic_state(model.with_coupling(g), schedule, settings, psi0, sign)
    return raw / _denominator(psi0, raw)


def _g_log_derivative(fn, g: float, dset: DerivativeSettings) -> complex:
    """``g d/dg log fn(g)`` by central difference on a continuous log branch.

    The relative step shrinks by 8 (up to three times) while the log jumps
    by more than pi/2 between the two samples.
    """
    delta = dset.dg_rel
    for _ in range(_BRANCH_RETRIES + 1):
        hi, lo = fn(g * (1 + delta)), fn(g * (1 - delta))
        dlog = complex(np.log(hi / lo))
        if abs(dlog) <= _BRANCH_LIMIT:
            d1 = dlog / (2 * delta)
            if not dset.richardson:
                return d1
            hi2, lo2 = fn(g * (1 + delta / 2)), fn(g * (1 - delta / 2))
            d2 = complex(np.log(hi2 / lo2)) / delta
            return (4 * d2 - d1) / 3
        delta /= 8
    raise BranchJump(f"log changes by {abs(dlog):.3g} between samples even at dg_rel={delta * 8:.2e}")


def energy_shift_complex(model, schedule, settings, dset, psi0_index: int = 0,
                         sign: Sign = "-") -> complex:
    """``-+ i eps g d/dg log <psi0|U_I(0, +-T)|psi0>``, the complex finite-eps shift."""
    _check_sign(sign)
    schedule = _schedule(schedule)
    if abs(model.g) < ZERO_COUPLING:
        return 0j
    _, psi0 = free_eigenstate(model, psi0_index)

    def den(g):
        return _denominator(psi0, asymptotic_state(model.with_coupling(g), schedule, settings,
                                                 psi0, sign))

    dlog = _g_log_derivative(den, model.g, dset)
    pref = -1j if sign == "+" else 1j
    return pref * schedule.epsilon * dlog


def energy_shift_log_derivative(model, schedule, settings, dset, psi0_index: int = 0,
                                sign: Sign = "-") -> float:
    """Real part of the log-derivative energy shift ``E_eps - E0``."""
    return energy_shift_complex(model, schedule, settings, dset, psi0_index, sign).real


class EigenResidual(NamedTuple):
    full: float
    no_derivative: float


def eigenresidual(model: QuantumModel, vec: GmlVector, dset: DerivativeSettings) -> EigenResidual:
    """Relative residuals of ``(H - E_eps +- i eps g d/dg)|ratio>`` with and without the g-term.

    Both are measured against ``|H ratio|`` (absolute when that vanishes).
    """
    h = model.hamiltonian
    r = vec.ratio
    base = h @ r - vec.energy_complex * r
    if abs(model.g) < ZERO_COUPLING:
        der = np.zeros_like(r)
    else:
        gder = (_ratio_at(model, vec.schedule, vec.settings, vec.psi0, vec.sign,
                          model.g * (1 + dset.dg_rel))
                - _ratio_at(model, vec.schedule, vec.settings, vec.psi0, vec.sign,
                            model.g * (1 - dset.dg_rel))) / (2 * dset.dg_rel)
        der = 1j * vec.epsilon * gder
    full = base + der if vec.sign == "+" else base - der
    scale = float(np.linalg.norm(h @ r))
    if scale <= tolerances().abs_floor:
        scale = 1.0
    return EigenResidual(float(np.linalg.norm(full)) / scale, float(np.linalg.norm(base)) / scale)


def continued_index(model: QuantumModel, vec: np.ndarray) -> int:
    """Eigenstate of H with maximal overlap with ``vec`` (adiabatic continuation)."""
    dec = spectral_decompose(model.hamiltonian)
    return int(np.argmax(np.abs(dec.eigenvectors.conj().T @ vec)))


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepResult:
    epsilons: tuple
    energies_plus: tuple
    energies_minus: tuple
    shifts_plus: tuple
    shifts_minus: tuple
    eigenresiduals_plus: tuple
    eigenresiduals_minus: tuple
    extrapolated_energy: float
    extrapolation_uncertainty: float
    extrapolated_plus: float
    extrapolated_minus: float
    order: float
    psi0_energy: float
    continued_index: int
    energies_imag_minus: tuple = ()


def _check_eps(eps_list) -> tuple:
    eps = tuple(float(e) for e in eps_list)
    if len(eps) < 3:
        raise ValueError("an adiabatic sweep needs at least three eps values")
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps values must be positive and strictly decreasing")
    return eps


def adiabatic_sweep(model: QuantumModel, eps_list: Sequence[float], settings: IntegratorSettings,
                    dset: DerivativeSettings, psi0_index: int = 0,
                    cutoff_decades: float = 8.0) -> SweepResult:
    """GML energies for both signs over decreasing eps, extrapolated to eps -> 0."""
    eps = _check_eps(eps_list)
    e_plus, e_minus, s_plus, s_minus, r_plus, r_minus, imag = [], [], [], [], [], [], []
    last = None
    for e in eps:
        sched = SwitchingSchedule(e, "symmetric", cutoff_decades)
        for sign, energies, shifts, resid in (("+", e_plus, s_plus, r_plus),
                                              ("-", e_minus, s_minus, r_minus)):
            vec = gml_vector(model, sched, settings, psi0_index, sign)
            energies.append(vec.energy)
            shifts.append(vec.psi0_energy
                          + energy_shift_log_derivative(model, sched, settings, dset, psi0_index, sign))
            resid.append(eigenresidual(model, vec, dset))
            if sign == "-":
                imag.append(vec.energy_imag)
                last = vec
    ex_p = richardson(eps, e_plus)
    ex_m = richardson(eps, e_minus)
    value = 0.5 * (ex_p.value + ex_m.value)
    unc = max(ex_p.uncertainty, ex_m.uncertainty, 0.5 * abs(ex_p.value - ex_m.value))
    return SweepResult(eps, tuple(e_plus), tuple(e_minus), tuple(s_plus), tuple(s_minus),
                       tuple(r_plus), tuple(r_minus), float(value), float(unc),
                       float(ex_p.value), float(ex_m.value), float(ex_m.order),
                       last.psi0_energy, continued_index(model, last.ratio), tuple(imag))


def s_operator(model: QuantumModel, schedule: SwitchingSchedule,
               settings: IntegratorSettings) -> UnitaryMap:
    """``U_I(T, -T)``."""
    schedule = _schedule(schedule)
    big_t = schedule.cutoff
    return interaction_propagator(model, schedule, settings, big_t, -big_t)


@dataclass(frozen=True)
class SucherResult:
    epsilons: tuple
    estimates: tuple  # complex finite-eps values of (i eps / 2) g d/dg log <S>
    shifts: tuple
    extrapolated: float
    uncertainty: float
    order: float
    psi0_energy: float

    @property
    def energy(self) -> float:
        return self.psi0_energy + self.extrapolated


def sucher_estimate(model, schedule, settings, dset, psi0_index: int = 0) -> complex:
    """``(i eps / 2) g d/dg log <psi0|S|psi0>`` at one eps."""
    schedule = _schedule(schedule)
    if abs(model.g) < ZERO_COUPLING:
        return 0j
    _, psi0 = free_eigenstate(model, psi0_index)

    def s_exp(g):
        value = inner(psi0, s_operator(model.with_coupling(g), schedule, settings).u @ psi0)
        if abs(value) <= DENOMINATOR_MIN:
            raise VanishingSExpectation(f"|<psi0|S|psi0>| = {abs(value):.3e} at g={g}")
        return value

    return 0.5j * schedule.epsilon * _g_log_derivative(s_exp, model.g, dset)


def sucher_shift(model: QuantumModel, eps_list: Sequence[float], settings: IntegratorSettings,
                 dset: DerivativeSettings, psi0_index: int = 0,
                 cutoff_decades: float = 8.0) -> SucherResult:
    """Energy shift from the S-operator expectation, extrapolated to eps -> 0."""
    eps = _check_eps(eps_list)
    est = [sucher_estimate(model, SwitchingSchedule(e, "symmetric", cutoff_decades), settings,
                           dset, psi0_index) for e in eps]
    shifts = [z.real for z in est]
    ex = richardson(eps, shifts)
    e0, _ = free_eigenstate(model, psi0_index)
    return SucherResult(eps, tuple(est), tuple(shifts), float(ex.value), ex.uncertainty,
                        float(ex.order), e0)


# ---------------------------------------------------------------------------
# time reversal and the singular phase


@dataclass(frozen=True)
class TimeReversalReport:
    epsilon: float
    vector_mismatch: float
    energy_mismatch: float
    energy_plus: float
    energy_minus: float
    passed: bool


def time_reversal_compare(model: QuantumModel, schedule: SwitchingSchedule,
                          settings: IntegratorSettings, psi0_index: int = 0) -> TimeReversalReport:
    """Compare conj(|psi_eps^+>) with |psi_eps^->; T is complex conjugation."""
    if not (is_real(model.h0) and is_real(model.v)):
        raise NonRealModel("time reversal by complex conjugation needs real H0 and V")
    plus = gml_vector(model, schedule, settings, psi0_index, "+")
    minus = gml_vector(model, schedule, settings, psi0_index, "-")
    vec_mis = float(np.linalg.norm(plus.ratio.conj() - minus.ratio))
    e_mis = abs(plus.energy - minus.energy)
    tol = tolerances()
    passed = vec_mis <= tol["time_reversal.vector"] and e_mis <= tol["time_reversal.energy"]
    return TimeReversalReport(schedule.epsilon, vec_mis, e_mis, plus.energy, minus.energy, passed)


def denominator_phase(model: QuantumModel, schedule: SwitchingSchedule,
                      settings: IntegratorSettings, psi0_index: int = 0,
                      sign: Sign = "-") -> tuple[float, complex]:
    """Unwrapped phase of ``<psi0|U_I(tau, +-T)|psi0>`` tracked from tau = +-T to 0.

    Chunks are short enough that the phase moves by well under pi/2 between
    samples, so no 2*pi ambiguity can enter. Returns (phase, final value).
    """
    _check_sign(sign)
    schedule = _schedule(schedule)
    e0, psi0 = free_eigenstate(model, psi0_index)
    big_t = schedule.cutoff
    strength = abs(model.g) * float(np.linalg.norm(model.v, 2))
    max_span = 0.5 / strength if strength > 0 else None
    phase, prev = 0.0, 1.0 + 0j
    if sign == "-":
        walk = tracked_path(model, schedule, settings, -big_t, 0.0, max_span)
        # <psi0|U_I(tau, -T)|psi0> = exp(i (tau + T) E0) <psi0|U(tau, -T)|psi0>
        values = (np.exp(1j * (tau + big_t) * e0) * inner(psi0, u @ psi0) for tau, u in walk)
    else:
        walk = tracked_path(model, schedule, settings, 0.0, big_t, max_span, reverse=True)
        # <psi0|U_I(tau, T)|psi0> = conj(exp(i (T - tau) E0) <psi0|U(T, tau)|psi0>)
        values = (np.conj(np.exp(1j * (big_t - tau) * e0) * inner(psi0, u @ psi0))
                  for tau, u in walk)
    for d in values:
        if abs(d) <= DENOMINATOR_MIN:
            raise VanishingDenominator("denominator vanished along the path")
        step = float(np.angle(d / prev))
        if abs(step) > _BRANCH_LIMIT:
            raise BranchJump(f"denominator phase moved by {step:.3g} within one chunk")
        phase += step
        prev = d
    return phase, complex(prev)


@dataclass(frozen=True)
class PhaseDiagnostic:
    epsilons: tuple
    phases: tuple
    slope_fit: float
    intercept: float
    linearity_r2: float
    passed: bool


def phase_divergence(model: QuantumModel, eps_list: Sequence[float], settings: IntegratorSettings,
                     psi0_index: int = 0, sign: Sign = "-",
                     cutoff_decades: float = 8.0) -> PhaseDiagnostic:
    """Linear fit of the denominator phase against 1/eps."""
    eps = _check_eps(eps_list)
    phases = [denominator_phase(model, SwitchingSchedule(e, "symmetric", cutoff_decades),
                                settings, psi0_index, sign)[0] for e in eps]
    x = 1.0 / np.asarray(eps)
    y = np.asarray(phases)
    slope, intercept = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    if ss_tot <= 1e-300:
        slope = 0.0
    return PhaseDiagnostic(eps, tuple(phases), float(slope), float(intercept), r2, r2 >= 0.99)
