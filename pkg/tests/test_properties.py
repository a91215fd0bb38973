"""Randomized structural invariants."""

import math

import numpy as np
from hypothesis import given, settings, strategies as st

from bec_ecs.cavity import jc_unitary
from bec_ecs.dynamics import ChannelParams, evolve_multiphoton_channel, evolve_single_photon_channel
from bec_ecs.fock_core import (
    DensityOperator,
    ModeSpec,
    PureState,
    check_unitary,
    fidelity,
    partial_trace,
)
from bec_ecs.optics import (
    BeamSplitterParams,
    DetectorModel,
    apply_beam_splitter,
    beam_splitter_unitary,
    onoff_click_povm,
    quasi_bell_analyzer,
)

CASES = settings(max_examples=100, deadline=None, derandomize=True)

angles = st.floats(-math.pi, math.pi, allow_nan=False)
cutoffs = st.integers(1, 6)
amplitudes = st.floats(-1.2, 1.2, allow_nan=False)


def _splitter(theta, phi, psi):
    return BeamSplitterParams(math.sin(theta) * np.exp(1j * phi), math.cos(theta) * np.exp(1j * psi))


def _random_state(seed, dims, labels=("a", "b", "c")):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=dims) + 1j * rng.normal(size=dims)
    modes = tuple(ModeSpec(lab, d - 1) for lab, d in zip(labels, dims))
    return PureState(modes, amps / np.linalg.norm(amps))


@CASES
@given(angles, angles, angles, cutoffs, cutoffs)
def test_beam_splitter_unitarity(theta, phi, psi, ca, cb):
    u = beam_splitter_unitary(_splitter(theta, phi, psi), (ca, cb))
    check_unitary(u)


@CASES
@given(st.floats(0, 4 * math.pi), cutoffs)
def test_jc_unitarity(wt, c):
    check_unitary(jc_unitary(wt, c))


@CASES
@given(st.floats(1e-3, 1.0), st.integers(0, 30))
def test_povm_completeness(eta, c):
    no, yes = onoff_click_povm(DetectorModel(eta), c)
    np.testing.assert_allclose(no + yes, np.eye(c + 1), atol=1e-14)
    assert np.all(np.diag(no) >= 0) and np.all(np.diag(yes) >= 0)


@CASES
@given(st.integers(0, 2**31), st.lists(st.integers(1, 4), min_size=3, max_size=3), st.integers(0, 2))
def test_partial_trace_preserves_trace(seed, dims, traced):
    state = _random_state(seed, tuple(dims))
    keep = [lab for i, lab in enumerate(state.labels) if i != traced]
    rho = DensityOperator.from_pure(state)
    for red in (partial_trace(rho, keep), partial_trace(state, keep)):
        assert abs(red.trace() - 1) < 1e-12
        assert red.is_psd()
    # tracing in two steps agrees with tracing at once
    one = partial_trace(partial_trace(rho, keep), keep[:1])
    np.testing.assert_allclose(one.matrix, partial_trace(rho, keep[:1]).matrix, atol=1e-12)


@CASES
@given(st.integers(0, 2**31), angles, angles, angles)
def test_beam_splitter_preserves_norm(seed, theta, phi, psi):
    state = _random_state(seed, (3, 4, 2))
    out = apply_beam_splitter(state, "a", "b", _splitter(theta, phi, psi))
    assert abs(out.norm() - 1) < 1e-12


@CASES
@given(st.integers(-3, 3), st.floats(0, 2 * math.pi), amplitudes, amplitudes, angles, angles)
def test_single_photon_channel_two_pi_periodic(K, tau, a1, a2, theta, phi):
    kw = dict(bec_cutoffs=(16, 16))
    s = evolve_single_photon_channel((a1, a2), (theta, phi), ChannelParams(K, tau), **kw)
    t = evolve_single_photon_channel((a1, a2), (theta, phi), ChannelParams(K, tau + 2 * math.pi), **kw)
    assert fidelity(s, t) >= 1 - 1e-9
    assert abs(s.norm() - 1) < 1e-9 * max(1.0, t.norm())


@settings(max_examples=100, deadline=None, derandomize=True)
@given(st.integers(-2, 2), st.floats(0, 2 * math.pi), st.floats(0.2, 1.0), st.floats(0.2, 1.0))
def test_multiphoton_channel_two_pi_periodic(K, tau, a, beta):
    cut = {"probe": 12, "bec1": 12, "bec2": 12}
    s = evolve_multiphoton_channel((a, a), beta, ChannelParams(K, tau), cut)
    t = evolve_multiphoton_channel((a, a), beta, ChannelParams(K, tau + 2 * math.pi), cut)
    assert fidelity(s, t) >= 1 - 1e-9


@CASES
@given(st.integers(0, 2**31), st.integers(0, 1), st.integers(2, 6))
def test_analyzer_conserves_total_parity(seed, parity, c):
    rng = np.random.default_rng(seed)
    n = np.add.outer(np.arange(c + 1), np.arange(c + 1))
    amps = (rng.normal(size=n.shape) + 1j * rng.normal(size=n.shape)) * (n % 2 == parity)
    # keep the state inside the exactly represented photon-number blocks
    amps[n > c] = 0
    if not np.any(amps):
        amps[0, parity] = 1.0
    state = PureState((ModeSpec("a", c), ModeSpec("b", c)), amps / np.linalg.norm(amps))
    res = quasi_bell_analyzer(state, "a", "b")
    counts = res.counts
    assert abs(counts.sum() - 1) < 1e-12
    assert counts[n % 2 != parity].sum() < 1e-12
    assert abs(sum(res.probabilities.values()) - 1) < 1e-12
