"""Numerical checks of the exact g-derivative identities for switched propagators.

Each check compares a central finite difference in the coupling,
``i eps g dU/dg``, against a commutator-like right-hand side built from the
same propagators, and returns an :class:`IdentityReport`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Literal

import numpy as np

from .dynamics import (
    IntegratorSettings,
    QuantumModel,
    SwitchingSchedule,
    asymptotic_interaction_propagator,
    h_eps_at,
    interaction_propagator,
    propagate,
)
from .errors import (
    DegenerateEigenvalue,
    IntervalStraddlesZero,
    NonPositiveCoupling,
    WrongInterval,
)
from .operators import max_norm, nondegenerate_gap, spectral_decompose, unitary_exponential

ZERO_COUPLING = 1e-12
DEGENERACY_TOL = 1e-10

IdentityId = Literal[
    "lemma_negative", "lemma_positive", "lemma_mixed", "interaction_negative",
    "interaction_positive", "eigenstate_relation", "time_translation",
]


@dataclass(frozen=True)
class DerivativeSettings:
    dg_rel: float = 1e-4
    richardson: bool = False

    def __post_init__(self):
        if not 1e-8 <= self.dg_rel <= 1e-2:
            raise ValueError(f"dg_rel {self.dg_rel} outside [1e-8, 1e-2]")


@dataclass(frozen=True)
class ToleranceModel:
    constants: dict = field(default_factory=dict)

    def __getitem__(self, key: str) -> float:
        return self.constants[key]

    def bound(self, kind: str, step: float, dg_rel: float = 0.0,
              cutoff_decades: float | None = None) -> float:
        c = self.constants
        if kind == "translation":
            return c["translation.c_step"] * step**2
        value = c[f"{kind}.c_dg"] * dg_rel**2 + c[f"{kind}.c_step"] * step**2
        if kind == "asymptotic" and cutoff_decades is not None:
            value += c["asymptotic.c_cutoff"] * 10.0 ** (-cutoff_decades)
        return value

    @property
    def abs_floor(self) -> float:
        return self.constants["abs_floor"]


def load_tolerance_model(path: str | Path | None = None) -> ToleranceModel:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    if path is None:
        text = resources.files("gmlbench").joinpath("calibration.txt").read_text()
    else:
        text = Path(path).read_text()
    constants = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"calibration line {lineno}: expected key = value")
        constants[key.strip()] = float(value)
    return ToleranceModel(constants)


_TOLERANCES: ToleranceModel | None = None


def tolerances() -> ToleranceModel:
    global _TOLERANCES
    if _TOLERANCES is None:
        _TOLERANCES = load_tolerance_model()
    return _TOLERANCES


def set_tolerances(model: ToleranceModel | None):
    """Install a tolerance model process-wide (``None`` restores the packaged one)."""
    global _TOLERANCES
    _TOLERANCES = model


@dataclass(frozen=True)
class IdentityReport:
    identity_id: str
    parameters: dict
    lhs_norm: float
    rhs_norm: float
    residual_abs: float
    residual_rel: float
    bound: float
    passed: bool

    def row(self) -> dict:
        out = {"identity": self.identity_id}
        out.update(self.parameters)
        out.update(lhs_norm=self.lhs_norm, rhs_norm=self.rhs_norm,
                   residual_abs=self.residual_abs, residual_rel=self.residual_rel,
                   bound=self.bound, passed=self.passed)
        return out


def _report(identity_id, params, lhs, rhs, resid, bound, scale=None) -> IdentityReport:
    lhs_norm = float(np.linalg.norm(lhs))
    rhs_norm = float(np.linalg.norm(rhs))
    res = float(np.linalg.norm(resid))
    if scale is None:
        scale = max(lhs_norm, rhs_norm)
    floor = tolerances().abs_floor
    # both sides vanish (e.g. g = 0): report the absolute residual
    rel = res / scale if scale > floor else res
    passed = rel <= bound or res <= floor
    return IdentityReport(identity_id, params, lhs_norm, rhs_norm, res, rel, bound, passed)


def _params(model, schedule, settings, dset=None, **extra) -> dict:
    p = dict(extra)
    p.update(g=model.g, epsilon=schedule.epsilon, step=settings.step)
    if dset is not None:
        p["dg_rel"] = dset.dg_rel
    return p


def _central(fn, g: float, dg_rel: float):
    """``g * d fn/dg`` by central difference at relative step ``dg_rel``."""
    return (fn(g * (1 + dg_rel)) - fn(g * (1 - dg_rel))) / (2 * dg_rel)


def g_log_derivative(fn, g: float, dset: DerivativeSettings):
    """``g * d fn/dg`` with optional Richardson refinement (delta, delta/2)."""
    d1 = _central(fn, g, dset.dg_rel)
    if not dset.richardson:
        return d1
    d2 = _central(fn, g, dset.dg_rel / 2)
    return (4 * d2 - d1) / 3


def g_derivative_of_propagator(model: QuantumModel, schedule: SwitchingSchedule,
                               settings: IntegratorSettings, dset: DerivativeSettings,
                               t: float, s: float,
                               picture: Literal["schrodinger", "interaction"] = "schrodinger",
                               ) -> np.ndarray:
    """``i eps g dU(t,s)/dg`` by central difference in g.

    At vanishing coupling the prefactor g annihilates the derivative and an
    exact zero matrix is returned.
    """
    if abs(model.g) < ZERO_COUPLING:
        return np.zeros((model.dim, model.dim), dtype=complex)
    prop = interaction_propagator if picture == "interaction" else propagate

    def u_of(g):
        return prop(model.with_coupling(g), schedule, settings, t, s).u

    return 1j * schedule.epsilon * g_log_derivative(u_of, model.g, dset)


def _region(t: float, s: float) -> str:
    if t <= 0 and s <= 0:
        return "negative"
    if t >= 0 and s >= 0:
        return "positive"
    raise IntervalStraddlesZero(f"(t, s) = ({t}, {s}) straddles 0; use lemma_mixed_residual")


def lemma_residual(model, schedule, settings, dset, t: float, s: float) -> IdentityReport:
    """Schrodinger-picture identity on a one-signed interval.

    negative (t, s <= 0): i eps g dU/dg = H(t) U - U H(s)
    positive (t, s >= 0): i eps g dU/dg = -H(t) U + U H(s)
    """
    region = _region(t, s)
    lhs = g_derivative_of_propagator(model, schedule, settings, dset, t, s)
    u = propagate(model, schedule, settings, t, s).u
    rhs = h_eps_at(model, schedule, t) @ u - u @ h_eps_at(model, schedule, s)
    if region == "positive":
        rhs = -rhs
    bound = tolerances().bound("finite", settings.step, dset.dg_rel)
    return _report(f"lemma_{region}", _params(model, schedule, settings, dset, t=t, s=s),
                   lhs, rhs, lhs - rhs, bound)


def lemma_mixed_residual(model, schedule, settings, dset, t: float, s: float) -> IdentityReport:
    """Identity for t >= 0 >= s obtained from U(t,s) = U(t,0) U(0,s):

    i eps g dU/dg = -H(t) U(t,s) + 2 U(t,0) H U(0,s) - U(t,s) H(s),  H = H_eps(0).
    """
    if not (t >= 0 >= s):
        raise WrongInterval(f"mixed identity needs t >= 0 >= s, got ({t}, {s})")
    lhs = g_derivative_of_propagator(model, schedule, settings, dset, t, s)
    u = propagate(model, schedule, settings, t, s).u
    u_t0 = propagate(model, schedule, settings, t, 0.0).u
    u_0s = propagate(model, schedule, settings, 0.0, s).u
    h = model.hamiltonian
    rhs = (-h_eps_at(model, schedule, t) @ u + 2 * u_t0 @ h @ u_0s
           - u @ h_eps_at(model, schedule, s))
    bound = tolerances().bound("finite", settings.step, dset.dg_rel)
    return _report("lemma_mixed", _params(model, schedule, settings, dset, t=t, s=s),
                   lhs, rhs, lhs - rhs, bound)


def h_eps_interaction(model, schedule, t: float) -> np.ndarray:
    """``exp(i t H0) H_eps(t) exp(-i t H0)``."""
    return (unitary_exponential(model.h0, -t) @ h_eps_at(model, schedule, t)
            @ unitary_exponential(model.h0, t))


def interaction_identity_residual(model, schedule, settings, dset, t: float, s: float
                                  ) -> IdentityReport:
    region = _region(t, s)
    lhs = g_derivative_of_propagator(model, schedule, settings, dset, t, s, "interaction")
    u = interaction_propagator(model, schedule, settings, t, s).u
    rhs = h_eps_interaction(model, schedule, t) @ u - u @ h_eps_interaction(model, schedule, s)
    if region == "positive":
        rhs = -rhs
    bound = tolerances().bound("finite", settings.step, dset.dg_rel)
    return _report(f"interaction_{region}", _params(model, schedule, settings, dset, t=t, s=s),
                   lhs, rhs, lhs - rhs, bound)


def free_eigenstate(model: QuantumModel, psi0_index: int) -> tuple[float, np.ndarray]:
    """Eigenpair ``psi0_index`` of H0, required to be nondegenerate."""
    dec = spectral_decompose(model.h0)
    if not 0 <= psi0_index < model.dim:
        raise ValueError(f"psi0_index {psi0_index} out of range for dim {model.dim}")
    gap = nondegenerate_gap(dec.eigenvalues, psi0_index)
    if gap <= DEGENERACY_TOL:
        raise DegenerateEigenvalue(f"H0 eigenvalue {psi0_index} is degenerate (gap {gap:.2e})")
    return float(dec.eigenvalues[psi0_index]), dec.vector(psi0_index).astype(complex)


def asymptotic_state(model, schedule, settings, psi0: np.ndarray, sign: str) -> np.ndarray:
    """``U_I(0, +-T) |psi0>``."""
    um = asymptotic_interaction_propagator(model, schedule, settings, 0.0, sign)
    u = um.u if sign == "-" else um.u.conj().T
    return u @ psi0


def eigenstate_relation_residual(model, schedule, settings, dset, psi0_index: int,
                                 sign: Literal["+", "-"]) -> IdentityReport:
    """Residual of ``(H - E0 +- i eps g d/dg) U_I(0, +-T)|psi0> = 0``.

    Upper sign for the vector pulled back from +T, lower sign from -T. The
    relative residual is measured against ``|H U_I(0, +-T)|psi0>|``.
    """
    e0, psi0 = free_eigenstate(model, psi0_index)
    vec = asymptotic_state(model, schedule, settings, psi0, sign)
    if abs(model.g) < ZERO_COUPLING:
        der = np.zeros_like(vec)
    else:
        der = 1j * schedule.epsilon * g_log_derivative(
            lambda g: asymptotic_state(model.with_coupling(g), schedule, settings, psi0, sign),
            model.g, dset)
    h = model.hamiltonian
    lhs = h @ vec - e0 * vec
    rhs = -der if sign == "+" else der
    bound = tolerances().bound("asymptotic", settings.step, dset.dg_rel, schedule.cutoff_decades)
    params = _params(model, schedule, settings, dset, psi0_index=psi0_index,
                     sign=sign, cutoff_decades=schedule.cutoff_decades)
    return _report("eigenstate_relation", params, lhs, rhs, lhs - rhs, bound,
                   scale=float(np.linalg.norm(h @ vec)))


def time_translation_residual(model, schedule, settings, t: float, s: float) -> IdentityReport:
    """Compare ``U_eps(t, s)`` with ``U^(+)(t + theta, s + theta)``, ``g = exp(eps theta)``."""
    if not (t <= 0 and s <= 0):
        raise WrongInterval(f"time translation needs 0 >= t, s; got ({t}, {s})")
    if not model.g > 0:
        raise NonPositiveCoupling(f"g = {model.g} must be positive (theta = ln g / eps)")
    theta = math.log(model.g) / schedule.epsilon
    lhs = propagate(model, schedule.with_branch("symmetric"), settings, t, s).u
    rhs = propagate(model, schedule.with_branch("plus"), settings, t + theta, s + theta).u
    diff = max_norm(lhs - rhs)
    bound = tolerances().bound("translation", settings.step)
    params = _params(model, schedule, settings, t=t, s=s, theta=theta)
    lhs_n, rhs_n = float(np.linalg.norm(lhs)), float(np.linalg.norm(rhs))
    passed = diff <= bound or diff <= tolerances().abs_floor
    return IdentityReport("time_translation", params, lhs_n, rhs_n, diff,
                          diff / max(lhs_n, rhs_n, 1e-300), bound, passed)
