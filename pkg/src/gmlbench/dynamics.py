"""Switched Hamiltonians and their propagators.

The time-dependent Hamiltonians handled here all have the form
``H(t) = H0 + c(t) V`` with a scalar profile ``c``:

* symmetric: ``c(t) = g exp(-eps |t|)``  (the adiabatically switched H_eps)
* plus:      ``c(t) = exp(+eps t)``      (g-independent family H^(+))
* minus:     ``c(t) = exp(-eps t)``      (g-independent family H^(-))

Propagators are built with the exponential midpoint rule
``U(tau + h, tau) = exp(-i h H(tau + h/2))`` on a time grid anchored at the
integer multiples of the step, so that every grid shares nodes with every
other grid of the same step (0 is always a node, which also keeps the kink of
the symmetric profile on a node). Backward propagation is the adjoint of the
forward one. hbar = 1 throughout.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterator, Literal, Mapping

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (
    ConvergenceFailure,
    EndpointMismatch,
    PictureMismatch,
    PropagationGuard,
    StepTooLarge,
)
from .operators import assert_hermitian, is_real, unitarity_deviation, unitary_exponential

if TYPE_CHECKING:
    from .models import CatalogOperator

Branch = Literal["symmetric", "plus", "minus"]
Picture = Literal["schrodinger", "interaction"]

MAX_STEP = 0.1
MAX_STEPS = 1e8
UNITARITY_TOL = 1e-10
_CHUNK = 4096
_GRID_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QuantumModel:
    """H0, V and the coupling g of ``H = H0 + g V``."""

    h0: np.ndarray
    v: np.ndarray
    g: float
    name: str = "model"
    operators: Mapping[str, "CatalogOperator"] = field(default_factory=dict)

    def __post_init__(self):
        h0 = assert_hermitian(self.h0, "h0")
        v = assert_hermitian(self.v, "v")
        if h0.shape != v.shape:
            raise ValueError(f"h0 {h0.shape} and v {v.shape} differ in shape")
        if not math.isfinite(self.g):
            raise ValueError("coupling must be finite")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "g", float(self.g))

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.h0 + self.g * self.v

    def with_coupling(self, g: float) -> "QuantumModel":
        return replace(self, g=g)

    def key(self) -> tuple:
        """Hashable identity of the numerical content (used for caching)."""
        return (self.h0.tobytes(), self.v.tobytes(), self.h0.shape, self.g)


@dataclass(frozen=True)
class SwitchingSchedule:
    epsilon: float
    branch: Branch = "symmetric"
    cutoff_decades: float = 8.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.branch not in ("symmetric", "plus", "minus"):
            raise ValueError(f"unknown branch {self.branch!r}")
        if not self.cutoff_decades > 0:
            raise ValueError("cutoff_decades must be positive")

    @property
    def cutoff(self) -> float:
        """Finite time T standing in for infinity: exp(-eps T) = 10**-cutoff_decades."""
        return self.cutoff_decades * math.log(10.0) / self.epsilon

    def with_branch(self, branch: Branch) -> "SwitchingSchedule":
        return replace(self, branch=branch)


@dataclass(frozen=True)
class IntegratorSettings:
    step: float = 1e-3
    scheme: str = "exponential-midpoint"

    def __post_init__(self):
        if not self.step > 0:
            raise StepTooLarge("step must be positive")
        if self.step > MAX_STEP:
            raise StepTooLarge(f"step {self.step} exceeds {MAX_STEP}")
        if self.scheme != "exponential-midpoint":
            raise ValueError("only the exponential-midpoint scheme is available")

    @classmethod
    def default_for(cls, model: QuantumModel) -> "IntegratorSettings":
        scale = np.linalg.norm(model.h0 + abs(model.g) * model.v, 2)
        return cls(step=float(1e-3 * min(1.0, 1.0 / scale)) if scale > 0 else 1e-3)


@dataclass(frozen=True)
class UnitaryMap:
    """A propagator ``U(t_final, t_initial)`` tagged with its picture."""

    u: np.ndarray
    t_final: float
    t_initial: float
    picture: Picture = "schrodinger"
    provenance: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        dev = unitarity_deviation(self.u)
        if dev > UNITARITY_TOL:
            raise ValueError(f"propagator violates unitarity by {dev:.3e}")
        if not (math.isfinite(self.t_final) and math.isfinite(self.t_initial)):
            raise ValueError("endpoints must be finite")

    def adjoint(self) -> "UnitaryMap":
        u = self.u.conj().T
        u.setflags(write=False)
        return UnitaryMap(u, self.t_initial, self.t_final, self.picture, self.provenance)

    def apply(self, vec) -> np.ndarray:
        return self.u @ vec


def coefficient(model: QuantumModel, schedule: SwitchingSchedule, t):
    """Scalar profile multiplying V at time(s) ``t``."""
    eps = schedule.epsilon
    if schedule.branch == "symmetric":
        return model.g * np.exp(-eps * np.abs(t))
    if schedule.branch == "plus":
        return np.exp(eps * np.asarray(t, dtype=float))
    return np.exp(-eps * np.asarray(t, dtype=float))


def h_eps_at(model: QuantumModel, schedule: SwitchingSchedule, t: float) -> np.ndarray:
    """``H0 + exp(-eps|t|) g V``."""
    if schedule.branch != "symmetric":
        raise ValueError("h_eps_at needs the symmetric branch")
    return model.h0 + float(coefficient(model, schedule, t)) * model.v


def h_pm_at(model: QuantumModel, schedule: SwitchingSchedule, t: float) -> np.ndarray:
    """``H0 + exp(+-eps t) V`` (no factor g)."""
    if schedule.branch not in ("plus", "minus"):
        raise ValueError("h_pm_at needs the plus or minus branch")
    return model.h0 + float(coefficient(model, schedule, t)) * model.v


def hamiltonian_at(model: QuantumModel, schedule: SwitchingSchedule, t: float) -> np.ndarray:
    return model.h0 + float(coefficient(model, schedule, t)) * model.v


# ---------------------------------------------------------------------------
# stepping engine


def _blocks(h0: np.ndarray, v: np.ndarray) -> list[np.ndarray]:
    """Index sets of the invariant blocks shared by H0 and V."""
    pattern = (h0 != 0) | (v != 0)
    n, labels = connected_components(pattern, directed=False)
    return [np.flatnonzero(labels == k) for k in range(n)]


def _chunk_bounds(s: float, t: float, step: float, max_span: float | None):
    """Forward grid on [s, t]: s, the multiples of ``step`` strictly inside, t.

    Yields consecutive node arrays that overlap in their end points.
    """
    k_lo = math.floor(s / step + _GRID_TOL) + 1
    k_hi = math.ceil(t / step - _GRID_TOL) - 1
    per_chunk = _CHUNK
    if max_span is not None:
        per_chunk = max(1, min(_CHUNK, int(max_span / step)))
    start = s
    k = k_lo
    while True:
        k_end = min(k + per_chunk - 1, k_hi)
        inner = np.arange(k, k_end + 1, dtype=float) * step
        last = k_end >= k_hi
        stop = t if last else inner[-1]
        body = inner if last else inner[:-1]
        nodes = np.concatenate(([start], body, [stop]))
        yield nodes
        if last:
            return
        start = stop
        k = k_end + 1


def _nearest_unitary(u: np.ndarray) -> np.ndarray:
    """Polar factor of ``u``; removes roundoff drift accumulated over long products."""
    w, _, vh = np.linalg.svd(u)
    return w @ vh


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """``mats[n-1] @ ... @ mats[0]`` by pairwise reduction."""
    m = mats
    while m.shape[0] > 1:
        if m.shape[0] % 2:
            m = np.concatenate((m, np.eye(m.shape[1], dtype=m.dtype)[None]))
        m = m[1::2] @ m[0::2]
    return m[0]


class _Stepper:
    """Exponential-midpoint products for ``H0 + c(t) V`` on a fixed block structure."""

    def __init__(self, h0: np.ndarray, v: np.ndarray, coef):
        self.dim = h0.shape[0]
        self.coef = coef
        self.blocks = []
        for idx in _blocks(h0, v):
            b0 = h0[np.ix_(idx, idx)]
            bv = v[np.ix_(idx, idx)]
            if is_real(b0) and is_real(bv):
                b0, bv = b0.real, bv.real
            self.blocks.append((idx, b0, bv))

    def chunk_product(self, nodes: np.ndarray) -> np.ndarray:
        mid = 0.5 * (nodes[:-1] + nodes[1:])
        dt = np.diff(nodes)
        c = np.asarray(self.coef(mid), dtype=float)
        if not np.all(np.isfinite(c)):
            raise PropagationGuard("switching profile overflowed")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for idx, b0, bv in self.blocks:
            h = b0[None, :, :] + c[:, None, None] * bv[None, :, :]
            try:
                w, q = np.linalg.eigh(h)
            except np.linalg.LinAlgError as exc:
                raise ConvergenceFailure(str(exc)) from exc
            phase = np.exp(-1j * dt[:, None] * w)
            steps = (q * phase[:, None, :]) @ np.swapaxes(q, 1, 2).conj()
            out[np.ix_(idx, idx)] = _ordered_product(steps)
        return out

    def forward(self, s: float, t: float, step: float, max_span: float | None = None
                ) -> Iterator[tuple[float, np.ndarray]]:
        """Yield ``(b, U(b, s))`` at the end of every chunk, for s < t."""
        u = np.eye(self.dim, dtype=complex)
        for nodes in _chunk_bounds(s, t, step, max_span):
            u = _nearest_unitary(self.chunk_product(nodes) @ u)
            yield float(nodes[-1]), u

    def backward(self, s: float, t: float, step: float, max_span: float | None = None
                 ) -> Iterator[tuple[float, np.ndarray]]:
        """Yield ``(a, U(t, a))`` with ``a`` stepping down from t to s, for s < t."""
        u = np.eye(self.dim, dtype=complex)
        for nodes in reversed(list(_chunk_bounds(s, t, step, max_span))):
            u = _nearest_unitary(u @ self.chunk_product(nodes))
            yield float(nodes[0]), u


def _check_guard(t: float, s: float, step: float):
    if not (math.isfinite(t) and math.isfinite(s)):
        raise PropagationGuard("endpoints must be finite")
    if step > MAX_STEP:
        raise StepTooLarge(f"step {step} exceeds {MAX_STEP}")
    if abs(t - s) / step > MAX_STEPS:
        raise PropagationGuard(f"|t - s|/step exceeds {MAX_STEPS:.0e}")


_CACHE: "OrderedDict[tuple, np.ndarray]" = OrderedDict()
_CACHE_SIZE = 512


def clear_cache():
    _CACHE.clear()


def _forward_matrix(model: QuantumModel, schedule: SwitchingSchedule, step: float,
                    s: float, t: float) -> np.ndarray:
    key = (model.key(), schedule, step, s, t)
    hit = _CACHE.get(key)
    if hit is not None:
        _CACHE.move_to_end(key)
        return hit
    stepper = _Stepper(model.h0, model.v, lambda x: coefficient(model, schedule, x))
    u = None
    for _, u in stepper.forward(s, t, step):
        pass
    u.setflags(write=False)
    _CACHE[key] = u
    if len(_CACHE) > _CACHE_SIZE:
        _CACHE.popitem(last=False)
    return u


def _provenance(model, schedule, settings, **extra) -> dict:
    prov = {
        "model": model.name,
        "g": model.g,
        "epsilon": schedule.epsilon,
        "branch": schedule.branch,
        "cutoff_decades": schedule.cutoff_decades,
        "step": settings.step,
    }
    prov.update(extra)
    return prov


def propagate(model: QuantumModel, schedule: SwitchingSchedule, settings: IntegratorSettings,
              t: float, s: float) -> UnitaryMap:
    """Schrodinger-picture ``U(t, s)``; ``t < s`` gives the adjoint of ``U(s, t)``."""
    t, s = float(t), float(s)
    _check_guard(t, s, settings.step)
    prov = _provenance(model, schedule, settings)
    if t == s:
        u = np.eye(model.dim, dtype=complex)
    elif t > s:
        u = _forward_matrix(model, schedule, settings.step, s, t)
    else:
        u = _forward_matrix(model, schedule, settings.step, t, s).conj().T
    u = np.array(u)
    u.setflags(write=False)
    return UnitaryMap(u, t, s, "schrodinger", prov)


def to_interaction(model: QuantumModel, u: np.ndarray, t: float, s: float) -> np.ndarray:
    """``exp(i t H0) U exp(-i s H0)``."""
    return unitary_exponential(model.h0, -t) @ u @ unitary_exponential(model.h0, s)


def interaction_propagator(model: QuantumModel, schedule: SwitchingSchedule,
                           settings: IntegratorSettings, t: float, s: float) -> UnitaryMap:
    um = propagate(model, schedule, settings, t, s)
    if um.t_final == um.t_initial:
        u = np.array(um.u)
    else:
        u = to_interaction(model, um.u, um.t_final, um.t_initial)
    u.setflags(write=False)
    return UnitaryMap(u, um.t_final, um.t_initial, "interaction", um.provenance)


def asymptotic_interaction_propagator(model: QuantumModel, schedule: SwitchingSchedule,
                                      settings: IntegratorSettings, t: float,
                                      direction: Literal["-", "+"]) -> UnitaryMap:
    """``U_I(t, -T)`` for direction ``"-"``, ``U_I(T, t)`` for ``"+"``."""
    if schedule.branch != "symmetric":
        raise ValueError("asymptotic propagators use the symmetric branch")
    big_t = schedule.cutoff
    if direction == "-":
        um = interaction_propagator(model, schedule, settings, t, -big_t)
    elif direction == "+":
        um = interaction_propagator(model, schedule, settings, big_t, t)
    else:
        raise ValueError(f"direction must be '-' or '+', got {direction!r}")
    prov = dict(um.provenance, cutoff_time=big_t)
    return replace(um, provenance=prov)


def compose(a: UnitaryMap, b: UnitaryMap) -> UnitaryMap:
    """``a @ b`` as a map from b.t_initial to a.t_final."""
    if a.picture != b.picture:
        raise PictureMismatch(f"{a.picture} vs {b.picture}")
    scale = 1.0 + max(abs(a.t_initial), abs(b.t_final))
    if abs(a.t_initial - b.t_final) > 1e-12 * scale:
        raise EndpointMismatch(f"a starts at {a.t_initial}, b ends at {b.t_final}")
    u = a.u @ b.u
    u.setflags(write=False)
    return UnitaryMap(u, a.t_final, b.t_initial, a.picture, a.provenance)


def tracked_path(model: QuantumModel, schedule: SwitchingSchedule, settings: IntegratorSettings,
                 s: float, t: float, max_span: float | None = None, reverse: bool = False
                 ) -> Iterator[tuple[float, np.ndarray]]:
    """Walk the grid of [s, t] chunk by chunk.

    Forward yields ``(b, U(b, s))`` for chunk ends b increasing from s to t;
    ``reverse=True`` yields ``(a, U(t, a))`` for a decreasing from t to s.
    """
    _check_guard(t, s, settings.step)
    if not t > s:
        raise ValueError("tracked_path needs t > s")
    stepper = _Stepper(model.h0, model.v, lambda x: coefficient(model, schedule, x))
    walk = stepper.backward if reverse else stepper.forward
    yield from walk(s, t, settings.step, max_span)
