import math

import numpy as np
import pytest

from bec_ecs.dynamics import (
    ChannelParams,
    ClosedFormUnavailable,
    RevivalSpec,
    effective_k,
    evolve,
    evolve_multiphoton_channel,
    evolve_single_photon_channel,
    generalized_coherent,
    hybrid_quarter_period,
    hybrid_state_closed_form,
    multiphoton_closed_form,
    multiphoton_initial,
    multiphoton_quarter_period,
    phase_theta,
    phase_theta_2d,
    phase_theta_prime,
    reconstruct_1d,
    reconstruct_2d,
    reconstruction_norm_1d,
    reconstruction_norm_2d,
    revival_coeffs_1d,
    revival_coeffs_2d,
    revival_spec_for,
    scaled_energy,
    single_photon_initial,
)
from bec_ecs.fock_core import PureState, fidelity, tensor
from bec_ecs.states import CoherentParams, coherent, ecs_unnormalized


def test_effective_k_examples():
    assert effective_k(1, 1, -2) == 1
    assert effective_k(0, 1, 3) == 0
    assert effective_k(1, -1, 2) == 1
    assert effective_k(1, 1, 2) == -1  # positive lambda and Delta give K < 0
    with pytest.raises(ValueError):
        effective_k(1, 0, 1)
    with pytest.raises(ValueError):
        effective_k(1, 1, 0)


def test_channel_params():
    p = ChannelParams.from_physical(g=1.0, lam=2.0, delta=-1.0, tau=0.5)
    assert p.K == 1.0 and p.omega_prime == pytest.approx(2.0)
    assert p.ks == (1.0, 1.0) and p.equal_channels
    assert ChannelParams(1, K2=2).ks == (1, 2)
    with pytest.raises(ValueError):
        ChannelParams(1, lam=0)


def test_scaled_energy_matches_phase():
    for K in (-2, 1, 3):
        for n in range(3):
            for m in range(6):
                # omega' = -K lambda
                assert scaled_energy(n, m, -K * 1.0, 1.0) == pytest.approx(-phase_theta_2d(n, m, K))


def test_phase_functions():
    assert phase_theta(0, 5) == 0 and phase_theta_prime(0, -3) == 0
    assert [phase_theta(m, 1) for m in range(1, 5)] == [1, 0, -3, -8]
    assert phase_theta_2d(1, 1, 1) == 3
    for m in range(6):
        assert phase_theta_2d(0, m, 2) == phase_theta(m, 2)
        assert phase_theta_2d(1, m, 2) == phase_theta_prime(m, 2)


def test_revival_spec_rules():
    with pytest.raises(ValueError):
        RevivalSpec(2, 4, 1)
    with pytest.raises(ValueError):
        RevivalSpec(1, 0, 1)
    with pytest.raises(ValueError):
        RevivalSpec(1, 3, 1.5)
    assert RevivalSpec(1, 4, 1).tau == pytest.approx(math.pi / 2)


def test_revival_coefficients_quarter_period():
    c = revival_coeffs_1d(RevivalSpec(1, 4, 1))
    np.testing.assert_allclose(c.c, [0, (1 - 1j) / 2, 0, (1 + 1j) / 2], atol=1e-14)
    np.testing.assert_allclose(c.c_prime, [0, (1 + 1j) / 2, 0, (1 - 1j) / 2], atol=1e-14)
    spec = RevivalSpec(1, 4, 1)
    # r = 2 is the rotation by pi, r = 4 the identity
    brute = generalized_coherent(1.0, spec.tau, 1, 0, 25)
    assert fidelity(brute, reconstruct_1d(c.c, 1.0, spec, 25)) >= 1 - 1e-9


def test_single_coefficient_for_n_equal_one():
    for M in (1, 2, 5):
        c = revival_coeffs_1d(RevivalSpec(M, 1, 2))
        assert len(c.c) == 1 and abs(abs(c.c[0]) - 1) < 1e-14
        c2 = revival_coeffs_2d(RevivalSpec(M, 1, -1)).c2
        assert c2.shape == (1, 1) and abs(abs(c2[0, 0]) - 1) < 1e-14


def test_coefficients_invariant_under_shifted_sum_range():
    spec = RevivalSpec(3, 5, 2)
    base = revival_coeffs_1d(spec).c
    N, M = spec.N, spec.M
    m = np.arange(N + 1, 2 * N + 1)
    r = np.arange(1, N + 1)
    th = np.array([phase_theta(int(k), spec.K) for k in m])
    shifted = np.exp(-2j * math.pi * (np.outer(r, m) - M * th[None, :]) / N).sum(axis=1) / N
    np.testing.assert_allclose(shifted, base, atol=1e-12)


@pytest.mark.parametrize("K", [-2, -1, 1, 2])
def test_revival_reconstruction_1d_grid(K):
    for N in range(1, 7):
        for M in range(1, 2 * N):
            if math.gcd(M, N) != 1:
                continue
            spec = RevivalSpec(M, N, K)
            cc = revival_coeffs_1d(spec)
            for alpha in (0.6, 1.5):
                for coeffs, n in ((cc.c, 0), (cc.c_prime, 1)):
                    brute = generalized_coherent(alpha, spec.tau, K, n, 30)
                    rec = reconstruct_1d(coeffs, alpha, spec, 30)
                    assert fidelity(brute, rec) >= 1 - 1e-7
                    assert abs(reconstruction_norm_1d(coeffs, alpha, spec) - 1) < 1e-8


@pytest.mark.parametrize("K", [-2, -1, 1, 2])
def test_revival_reconstruction_2d_grid(K):
    c = 25
    for N in range(1, 7):
        for M in range(1, N + 1):
            if math.gcd(M, N) != 1:
                continue
            spec = RevivalSpec(M, N, K)
            c2 = revival_coeffs_2d(spec).c2
            for beta, alpha in ((1.2, 1.0), (-1.2, 0.7)):
                init = tensor([coherent(CoherentParams(beta, c), "probe"), coherent(CoherentParams(alpha, c), "bec")])
                brute = evolve(init, ChannelParams(K, spec.tau), pairs=(("probe", "bec"),))
                rec = reconstruct_2d(c2, beta, alpha, spec, (c, c))
                assert fidelity(brute, rec) >= 1 - 1e-7
                assert abs(reconstruction_norm_2d(c2, beta, alpha, spec) - 1) < 1e-8


def test_single_photon_channel_initial_and_period():
    init = single_photon_initial((1.0, 0.5), (0.3, 0.2))
    s0 = evolve_single_photon_channel((1.0, 0.5), (0.3, 0.2), ChannelParams(1, 0.0))
    np.testing.assert_array_equal(s0.amplitudes, init.amplitudes)
    for K in (-2, 1, 3):
        a = evolve_single_photon_channel((1.0, 0.5), (0.3, 0.2), ChannelParams(K, 0.91))
        b = evolve_single_photon_channel((1.0, 0.5), (0.3, 0.2), ChannelParams(K, 0.91 + 2 * math.pi))
        assert fidelity(a, b) >= 1 - 1e-9
        assert abs(a.norm() - 1) < 1e-9
    with pytest.raises(ValueError):
        evolve_single_photon_channel((1.0, 1.0), (0.1, 0.0), ChannelParams(1, 0.1), probe_cutoff=0)


def test_non_integer_k_is_not_periodic():
    a = evolve_single_photon_channel((1.0, 1.0), (0.3, 0.0), ChannelParams(0.5, 0.4))
    b = evolve_single_photon_channel((1.0, 1.0), (0.3, 0.0), ChannelParams(0.5, 0.4 + 2 * math.pi))
    assert fidelity(a, b) < 1 - 1e-3


def test_hybrid_state_at_quarter_period():
    st = evolve_single_photon_channel((1.0, 1.0), (math.pi / 4, 0.0), ChannelParams(1, math.pi / 2))
    spec = RevivalSpec(1, 4, 1)
    assert fidelity(st, hybrid_state_closed_form((1.0, 1.0), (math.pi / 4, 0.0), spec)) >= 1 - 1e-7
    assert fidelity(st, hybrid_quarter_period((1.0, 1.0))) >= 1 - 1e-7


def test_hybrid_closed_form_general_revivals():
    for K, M, N in [(2, 1, 3), (-1, 2, 5), (1, 1, 6)]:
        spec = RevivalSpec(M, N, K)
        st = evolve_single_photon_channel((0.8, 1.1), (0.4, 1.3), ChannelParams(K, spec.tau))
        cf = hybrid_state_closed_form((0.8, 1.1), (0.4, 1.3), spec)
        assert fidelity(st, cf) >= 1 - 1e-7


def test_hybrid_second_branch_needs_odd_combination():
    # the even combination in the |B-> branch is far from the evolved state
    from bec_ecs.states import optical_bell
    from bec_ecs.fock_core import normalize

    st = evolve_single_photon_channel((1.0, 1.0), (math.pi / 4, 0.0), ChannelParams(1, math.pi / 2))
    cut = (st.modes[2].cutoff, st.modes[3].cutoff)
    wrong = tensor([optical_bell(1), ecs_unnormalized(1.0, -1.0, 1, cutoffs=cut)]) + tensor(
        [optical_bell(-1), ecs_unnormalized(1.0, 1.0, 1, cutoffs=cut)]
    ).scaled(1j)
    f = fidelity(st, normalize(wrong)[0])
    assert f < 0.5


def test_multiphoton_channel_initial_period_and_target():
    params0 = ChannelParams(-1, 0.0)
    s0 = evolve_multiphoton_channel((1.0, 1.0), 1.0, params0)
    np.testing.assert_array_equal(s0.amplitudes, multiphoton_initial((1.0, 1.0), 1.0).amplitudes)
    a = evolve_multiphoton_channel((1.0, 0.8), 0.9, ChannelParams(-1, 1.234))
    b = evolve_multiphoton_channel((1.0, 0.8), 0.9, ChannelParams(-1, 1.234 + 2 * math.pi))
    assert fidelity(a, b) >= 1 - 1e-9
    st = evolve_multiphoton_channel((1.0, 1.0), 1.0, ChannelParams(-1, math.pi / 2))
    assert fidelity(st, multiphoton_quarter_period((1.0, 1.0), 1.0)) >= 1 - 1e-7
    assert fidelity(st, multiphoton_closed_form((1.0, 1.0), 1.0, RevivalSpec(1, 4, -1))) >= 1 - 1e-7


def test_multiphoton_closed_form_other_revivals():
    for K, M, N in [(1, 1, 3), (2, 3, 4), (-2, 1, 2)]:
        spec = RevivalSpec(M, N, K)
        st = evolve_multiphoton_channel((0.9, 0.6), 0.8, ChannelParams(K, spec.tau))
        assert fidelity(st, multiphoton_closed_form((0.9, 0.6), 0.8, spec)) >= 1 - 1e-7


def test_number_expectations_are_conserved():
    init = multiphoton_initial((1.0, 0.7), 0.8)
    st = evolve_multiphoton_channel((1.0, 0.7), 0.8, ChannelParams(1.7, 2.3))
    for lab in st.labels:
        assert abs(st.mean_number(lab) - init.mean_number(lab)) < 1e-10


def test_revival_spec_for_and_unequal_channels():
    spec = revival_spec_for(ChannelParams(1, math.pi / 2))
    assert (spec.M, spec.N, spec.K) == (1, 4, 1)
    with pytest.raises(ClosedFormUnavailable):
        revival_spec_for(ChannelParams(1, math.pi / 2, K2=2))
    with pytest.raises(ClosedFormUnavailable):
        revival_spec_for(ChannelParams(0.5, math.pi / 2))
    with pytest.raises(ClosedFormUnavailable):
        revival_spec_for(ChannelParams(1, 1.0))


def test_unequal_channels_evolve_per_pair():
    st = evolve_single_photon_channel((1.0, 1.0), (0.3, 0.0), ChannelParams(1, 0.7, K2=-2))
    ref_k1 = generalized_coherent(1.0, 0.7, 1, 0, st.modes[2].cutoff, "bec1")
    ref_k2 = generalized_coherent(1.0, 0.7, -2, 0, st.modes[3].cutoff, "bec2")
    branch00 = PureState(st.modes[2:], st.amplitudes[0, 0] / math.cos(0.3))
    assert fidelity(branch00, tensor([ref_k1, ref_k2])) >= 1 - 1e-12
