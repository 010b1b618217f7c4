"""Property-based checks of the structural invariants."""

import itertools

import numpy as np
from hypothesis import HealthCheck, given, settings, strategies as st

from gmlbench.cli import render
from gmlbench.correlators import CorrelatorSpec, OperatorInsertion, time_order
from gmlbench.dynamics import IntegratorSettings, SwitchingSchedule, compose, propagate
from gmlbench.gml import richardson
from gmlbench.models import SIGMA_X, model_from_dict, model_to_dict, random_model
from gmlbench.operators import (
    assert_hermitian,
    max_norm,
    spectral_decompose,
    unitarity_deviation,
    unitary_exponential,
)

FAST = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
STEP = IntegratorSettings(4e-3)


@st.composite
def hermitian(draw, max_dim=6):
    n = draw(st.integers(1, max_dim))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


times = st.floats(-4.0, 4.0, allow_nan=False)


@FAST
@given(hermitian())
def test_spectral_decomposition_reconstructs(h):
    dec = spectral_decompose(h)
    assert np.all(np.diff(dec.eigenvalues) >= 0)
    q = dec.eigenvectors
    assert max_norm(q.conj().T @ q - np.eye(len(h))) <= 1e-12
    assert max_norm(dec.reconstruct() - h) <= 1e-12 * (1 + max_norm(h))


@FAST
@given(hermitian(), st.floats(-3, 3), st.floats(-3, 3))
def test_exponential_group_law(h, a, b):
    lhs = unitary_exponential(h, a) @ unitary_exponential(h, b)
    assert max_norm(lhs - unitary_exponential(h, a + b)) <= 1e-11 * (1 + max_norm(h) * 6)
    assert unitarity_deviation(unitary_exponential(h, a)) <= 1e-12


@FAST
@given(hermitian())
def test_hermitian_symmetrization_is_accepted(h):
    assert_hermitian(h)


@FAST
@given(st.integers(0, 50), st.floats(0.05, 1.0), times, times)
def test_propagator_unitary_and_reversible(seed, eps, t, s):
    m = random_model(3, seed, g=0.8)
    sched = SwitchingSchedule(eps)
    u = propagate(m, sched, STEP, t, s)
    assert unitarity_deviation(u.u) <= 1e-10
    back = propagate(m, sched, STEP, s, t)
    assert max_norm(back.u @ u.u - np.eye(3)) <= 1e-10


@FAST
@given(st.integers(0, 50), times, times, times)
def test_group_property(seed, t, r, s):
    m = random_model(3, seed, g=0.8)
    sched = SwitchingSchedule(0.3)
    comp = compose(propagate(m, sched, STEP, t, r), propagate(m, sched, STEP, r, s))
    assert max_norm(comp.u - propagate(m, sched, STEP, t, s).u) <= 1e-8


@FAST
@given(st.floats(-5, 5), st.floats(-3, 3).filter(lambda c: abs(c) > 1e-3),
       st.floats(0.5, 4.0), st.sampled_from([(0.2, 0.1, 0.05), (0.4, 0.25, 0.1)]))
def test_richardson_recovers_power_law(v, c, p, eps):
    ex = richardson(eps, [v + c * e**p for e in eps])
    assert abs(ex.value - v) <= 1e-8 * (1 + abs(v) + abs(c))
    assert abs(ex.order - p) <= 1e-5


def permutation_sign(perm):
    sign = 1
    for a, b in itertools.combinations(range(len(perm)), 2):
        if perm[a] > perm[b]:
            sign = -sign
    return sign


@FAST
@given(st.lists(st.tuples(st.integers(-20, 20), st.booleans()), min_size=0, max_size=4,
                unique_by=lambda x: x[0]))
def test_time_order_sign_is_fermionic_parity(entries):
    ins = [OperatorInsertion(str(k), SIGMA_X, float(t), "fermionic" if f else "bosonic")
           for k, (t, f) in enumerate(entries)]
    ordered, sign = time_order(CorrelatorSpec(tuple(ins)))
    times_out = [x.time for x in ordered]
    assert times_out == sorted(times_out, reverse=True)
    fermions = [int(x.label) for x in ordered if x.statistics == "fermionic"]
    assert sign == permutation_sign(fermions)


@FAST
@given(st.integers(2, 6), st.integers(0, 10_000), st.booleans())
def test_model_dict_round_trip(dim, seed, real):
    m = random_model(dim, seed, real=real)
    back = model_from_dict(model_to_dict(m))
    assert np.array_equal(back.h0, m.h0) and np.array_equal(back.v, m.v)


@FAST
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_rendering_round_trips_floats(x):
    assert float(render(x)) == x
