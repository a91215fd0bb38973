"""Effective probe/condensate dynamics and fractional revivals.

Everything runs in scaled time ``tau = lambda * t``.  Within one
probe/condensate pair the evolution is diagonal in the Fock basis with phase
``tau * theta(n, m)`` where ``n`` counts probe photons and ``m`` condensate
atoms:

    theta(n, m) = (1 + K) m + 2 K n m - m^2

At ``n = 0`` and ``n = 1`` this reduces to ``theta_m`` and ``theta'_m``.  For
integer ``K`` the phase is an integer, the dynamics is ``2 pi`` periodic, and
at ``tau = 2 pi M / N`` every generalized coherent state is a finite sum of
``N`` (or ``N^2``) rotated coherent states whose weights are discrete Fourier
sums of the phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock_core import (
    ModeSpec,
    PureState,
    apply_diagonal,
    default_cutoff,
    normalize,
    tensor,
)
from .states import (
    coherent_amplitudes,
    coherent_pair_sum,
    ecs_unnormalized,
    entangled_single_photon,
    optical_bell,
    product_coherent,
    quasi_bell_unnormalized,
)

SINGLE_PHOTON_LABELS = ("probe1", "probe2", "bec1", "bec2")


class ClosedFormUnavailable(ValueError):
    """The requested closed form does not exist for these parameters."""


def effective_k(g: complex, lam: float, delta: float) -> float:
    """Effective interaction parameter ``K = -2|g|^2 / (lambda * Delta)``."""
    if lam == 0:
        raise ValueError("interatomic strength lambda must be nonzero")
    if delta == 0:
        raise ValueError("two-photon detuning Delta must be nonzero")
    return -2.0 * abs(g) ** 2 / (lam * delta)


def omega_prime(g: complex, delta: float) -> float:
    """Light-shift frequency ``omega' = -2|g|^2 / Delta``."""
    if delta == 0:
        raise ValueError("two-photon detuning Delta must be nonzero")
    return -2.0 * abs(g) ** 2 / delta


@dataclass(frozen=True)
class ChannelParams:
    """Parameters of the effective dynamics.

    ``K`` applies to both probe/condensate pairs unless ``K2`` is given for
    the second pair.  ``g``, ``lam`` and ``delta`` are kept for bookkeeping
    only; the evolution depends on ``K`` and ``tau`` alone.
    """

    K: float
    tau: float = 0.0
    K2: float | None = None
    g: complex | None = None
    lam: float = 1.0
    delta: float | None = None

    def __post_init__(self):
        if self.lam == 0:
            raise ValueError("lambda must be nonzero")
        if self.delta == 0:
            raise ValueError("Delta must be nonzero")

    @classmethod
    def from_physical(cls, g: complex, lam: float, delta: float, tau: float = 0.0):
        return cls(K=effective_k(g, lam, delta), tau=tau, g=g, lam=lam, delta=delta)

    @property
    def omega_prime(self) -> float:
        return self.K * self.lam

    @property
    def ks(self) -> tuple[float, float]:
        return (self.K, self.K if self.K2 is None else self.K2)

    @property
    def equal_channels(self) -> bool:
        return self.K2 is None or self.K2 == self.K

    def at(self, tau: float) -> "ChannelParams":
        return ChannelParams(self.K, tau, self.K2, self.g, self.lam, self.delta)


def phase_theta(m, K):
    return (K + 1) * m - m * m


def phase_theta_prime(m, K):
    return (3 * K + 1) * m - m * m


def phase_theta_2d(n, m, K):
    return (1 + K) * m + 2 * K * n * m - m * m


def scaled_energy(n, m, omega_p: float, lam: float):
    """Pair eigenvalue ``omega' m + 2 omega' n m + lambda m (m - 1)`` divided by lambda."""
    return (omega_p * m + 2 * omega_p * n * m + lam * m * (m - 1)) / lam


@dataclass(frozen=True)
class RevivalSpec:
    """Fractional-revival time ``tau = 2 pi M / N`` for an integer ``K``."""

    M: int
    N: int
    K: int

    def __post_init__(self):
        for name in ("M", "N", "K"):
            v = getattr(self, name)
            if int(v) != v:
                raise ValueError(f"{name} must be an integer, got {v!r}")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if math.gcd(int(self.M), int(self.N)) != 1:
            raise ValueError(f"M={self.M} and N={self.N} are not coprime")

    @property
    def tau(self) -> float:
        return 2.0 * math.pi * self.M / self.N

    @property
    def phases(self) -> np.ndarray:
        """Rotation angles ``2 pi r / N`` for ``r = 1..N``."""
        return 2.0 * math.pi * np.arange(1, self.N + 1) / self.N


@dataclass(frozen=True, eq=False)
class RevivalCoefficients:
    spec: RevivalSpec
    c: np.ndarray | None = None
    c_prime: np.ndarray | None = None
    c2: np.ndarray | None = None

    @property
    def phases(self) -> np.ndarray:
        return self.spec.phases


def _dft_1d(spec: RevivalSpec, theta) -> np.ndarray:
    N, M = spec.N, spec.M
    m = np.arange(1, N + 1)
    r = np.arange(1, N + 1)
    th = np.array([theta(int(k), spec.K) for k in m])
    # c_r = (1/N) sum_m exp(-2 pi i (m r - M theta_m) / N), phases reduced exactly mod N
    expo = (np.outer(r, m) - M * th[None, :]) % N
    return np.exp(-2j * math.pi * expo / N).sum(axis=1) / N


def revival_coeffs_1d(spec: RevivalSpec) -> RevivalCoefficients:
    return RevivalCoefficients(
        spec, c=_dft_1d(spec, phase_theta), c_prime=_dft_1d(spec, phase_theta_prime)
    )


def revival_coeffs_2d(spec: RevivalSpec) -> RevivalCoefficients:
    N, M, K = spec.N, spec.M, spec.K
    k = np.arange(1, N + 1)
    n, m = np.meshgrid(k, k, indexing="ij")
    th = phase_theta_2d(n, m, K)
    c2 = np.zeros((N, N), dtype=np.complex128)
    for r in range(1, N + 1):
        for s in range(1, N + 1):
            expo = (n * r + m * s - M * th) % N
            c2[r - 1, s - 1] = np.exp(-2j * math.pi * expo / N).sum() / N**2
    return RevivalCoefficients(spec, c2=c2)


def reconstruct_1d(
    coeffs: np.ndarray, alpha: complex, spec: RevivalSpec, cutoff: int, label: str = "bec"
) -> PureState:
    """``sum_r c_r |alpha e^{i phi_r}>`` built from coherent amplitudes."""
    amps = sum(
        c * coherent_amplitudes(alpha * np.exp(1j * ph), cutoff)
        for c, ph in zip(coeffs, spec.phases)
    )
    return PureState((ModeSpec(label, cutoff),), amps)


def reconstruct_2d(
    c2: np.ndarray,
    beta: complex,
    alpha: complex,
    spec: RevivalSpec,
    cutoffs: Sequence[int],
    labels: Sequence[str] = ("probe", "bec"),
) -> PureState:
    """``sum_{rs} c_rs |beta e^{i phi_r}, alpha e^{i phi_s}>``."""
    ph = spec.phases
    terms = [
        (c2[r, s], beta * np.exp(1j * ph[r]), alpha * np.exp(1j * ph[s]))
        for r in range(spec.N)
        for s in range(spec.N)
    ]
    return coherent_pair_sum(terms, labels, cutoffs)


def coherent_gram(points: Sequence[complex]) -> np.ndarray:
    """Gram matrix ``<a_i|a_j> = exp(-|a_i|^2/2 - |a_j|^2/2 + conj(a_i) a_j)``."""
    a = np.asarray(points, dtype=np.complex128)
    return np.exp(
        -0.5 * np.abs(a)[:, None] ** 2 - 0.5 * np.abs(a)[None, :] ** 2 + np.outer(a.conj(), a)
    )


def reconstruction_norm_2d(c2: np.ndarray, beta: complex, alpha: complex, spec: RevivalSpec) -> float:
    """Squared norm of the 2-D reconstruction via the coherent Gram matrix."""
    ph = np.exp(1j * spec.phases)
    g = np.kron(coherent_gram(beta * ph), coherent_gram(alpha * ph))
    v = c2.reshape(-1)
    return float(np.real(np.vdot(v, g @ v)))


def reconstruction_norm_1d(c: np.ndarray, alpha: complex, spec: RevivalSpec) -> float:
    g = coherent_gram(alpha * np.exp(1j * spec.phases))
    return float(np.real(np.vdot(c, g @ c)))


def generalized_coherent(
    alpha: complex, tau: float, K: float, n_photons: int = 0, cutoff: int | None = None,
    label: str = "bec",
) -> PureState:
    """Fock series ``e^{-|a|^2/2} sum_m e^{i tau theta(n, m)} a^m/sqrt(m!) |m>``."""
    c = default_cutoff(alpha) if cutoff is None else cutoff
    m = np.arange(c + 1)
    amps = coherent_amplitudes(alpha, c) * np.exp(1j * tau * phase_theta_2d(n_photons, m, K))
    return PureState((ModeSpec(label, c),), amps)


def _pair_phase(layout: Sequence[tuple[int, int]], ks: Sequence[float], tau: float):
    """Phase function for modes listed as (probe_axis, bec_axis) pairs."""

    def fn(*grids):
        total = 0.0
        for (pa, ba), k in zip(layout, ks):
            total = total + tau * phase_theta_2d(grids[pa], grids[ba], k)
        return total

    return fn


def evolve(
    state: PureState,
    params: ChannelParams,
    pairs: Sequence[tuple[str, str]] = (("probe1", "bec1"), ("probe2", "bec2")),
) -> PureState:
    """Exact diagonal evolution of ``state`` to ``params.tau``.

    ``pairs`` lists (probe, condensate) mode labels coupled by the effective
    Hamiltonian; pair ``i`` uses ``params.ks[i]``.
    """
    layout = [(state.axis(p), state.axis(b)) for p, b in pairs]
    return apply_diagonal(state, _pair_phase(layout, params.ks[: len(pairs)], params.tau))


def single_photon_initial(
    bec_alphas: tuple[complex, complex],
    channel: tuple[float, float],
    probe_cutoff: int = 1,
    bec_cutoffs: Sequence[int] | None = None,
) -> PureState:
    a1, a2 = bec_alphas
    probes = entangled_single_photon(channel[0], channel[1], ("probe1", "probe2"), probe_cutoff)
    becs = product_coherent([a1, a2], ("bec1", "bec2"), bec_cutoffs)
    return tensor([probes, becs])


def evolve_single_photon_channel(
    bec_alphas: tuple[complex, complex],
    channel: tuple[float, float],
    params: ChannelParams,
    probe_cutoff: int = 1,
    bec_cutoffs: Sequence[int] | None = None,
) -> PureState:
    """Four-mode state (probe1, probe2, bec1, bec2) at ``params.tau``."""
    if probe_cutoff < 1:
        raise ValueError("probe cutoff must be >= 1")
    init = single_photon_initial(bec_alphas, channel, probe_cutoff, bec_cutoffs)
    return evolve(init, params)


def multiphoton_initial(
    bec_alphas: tuple[complex, complex],
    beta: complex,
    cutoffs: dict[str, int] | None = None,
) -> PureState:
    a1, a2 = bec_alphas
    cutoffs = dict(cutoffs or {})
    pc = cutoffs.get("probe", default_cutoff(beta))
    probes = normalize(quasi_bell_unnormalized(beta, "PP", +1, ("probe1", "probe2"), pc))[0]
    becs = product_coherent(
        [a1, a2], ("bec1", "bec2"), [cutoffs.get("bec1"), cutoffs.get("bec2")]
    )
    return tensor([probes, becs])


def evolve_multiphoton_channel(
    bec_alphas: tuple[complex, complex],
    beta: complex,
    params: ChannelParams,
    cutoffs: dict[str, int] | None = None,
) -> PureState:
    """Even quasi-Bell probes times product coherent condensates, evolved to ``params.tau``."""
    return evolve(multiphoton_initial(bec_alphas, beta, cutoffs), params)


# --- closed forms at fractional revivals -------------------------------------


def _require_integer_equal(params: ChannelParams) -> int:
    if not params.equal_channels:
        raise ClosedFormUnavailable("closed forms require equal channel parameters")
    if float(params.K) != int(params.K):
        raise ClosedFormUnavailable("closed forms require integer K")
    return int(params.K)


def revival_spec_for(params: ChannelParams, max_n: int = 64) -> RevivalSpec:
    """Find coprime (M, N) with ``tau = 2 pi M / N`` (``N <= max_n``)."""
    K = _require_integer_equal(params)
    x = params.tau / (2.0 * math.pi)
    for N in range(1, max_n + 1):
        M = round(x * N)
        if abs(M - x * N) < 1e-9 and math.gcd(M, N) == 1:
            return RevivalSpec(M, N, K)
    raise ClosedFormUnavailable(f"tau={params.tau} is not a fractional revival with N <= {max_n}")


def hybrid_state_closed_form(
    bec_alphas: tuple[complex, complex],
    channel: tuple[float, float],
    spec: RevivalSpec,
    bec_cutoffs: Sequence[int] | None = None,
    probe_cutoff: int = 1,
) -> PureState:
    """Revival superposition

    ``cos(t)|0,0> sum c_r1 c_r2 |a1 w^r1, a2 w^r2> + sin(t) e^{i p}|1,1> sum c'_r1 c'_r2 |...>``.
    """
    a1, a2 = bec_alphas
    theta, phi = channel
    cc = revival_coeffs_1d(spec)
    cut = _bec_cutoffs(bec_alphas, bec_cutoffs)
    w = np.exp(1j * spec.phases)

    def branch(c):
        terms = [
            (c[i] * c[j], a1 * w[i], a2 * w[j]) for i in range(spec.N) for j in range(spec.N)
        ]
        return coherent_pair_sum(terms, ("bec1", "bec2"), cut)

    probes0 = PureState.basis(_probe_modes(probe_cutoff), (0, 0))
    probes1 = PureState.basis(_probe_modes(probe_cutoff), (1, 1))
    return tensor([probes0, branch(cc.c)]).scaled(math.cos(theta)) + tensor(
        [probes1, branch(cc.c_prime)]
    ).scaled(math.sin(theta) * np.exp(1j * phi))


def _probe_modes(cutoff):
    return (ModeSpec("probe1", cutoff), ModeSpec("probe2", cutoff))


def _bec_cutoffs(bec_alphas, bec_cutoffs):
    if bec_cutoffs is None:
        return tuple(default_cutoff(a) for a in bec_alphas)
    return tuple(bec_cutoffs)


def hybrid_quarter_period(
    bec_alphas: tuple[complex, complex],
    bec_cutoffs: Sequence[int] | None = None,
    probe_cutoff: int = 1,
) -> PureState:
    """Normalized hybrid state at ``K=1, tau=pi/2`` for ``theta=pi/4, phi=0``:

    ``(1/2)[B(+) (x) ||E(a1,-a2)> + i B(-) (x) ||E(a1,a2)>_-]``

    with ``||E(a,b)>_+- = |a,b> +- |-a,-b>`` unnormalized.  The second branch
    carries the odd combination; the even one would be orthogonal to the
    evolved state.
    """
    a1, a2 = bec_alphas
    cut = _bec_cutoffs(bec_alphas, bec_cutoffs)
    e_even = ecs_unnormalized(a1, -a2, +1, ("bec1", "bec2"), cut)
    e_odd = ecs_unnormalized(a1, a2, -1, ("bec1", "bec2"), cut)
    bp = optical_bell(+1, cutoff=probe_cutoff)
    bm = optical_bell(-1, cutoff=probe_cutoff)
    return normalize(tensor([bp, e_even]) + tensor([bm, e_odd]).scaled(1j))[0]


def multiphoton_closed_form(
    bec_alphas: tuple[complex, complex],
    beta: complex,
    spec: RevivalSpec,
    cutoffs: dict[str, int] | None = None,
) -> PureState:
    """Four-mode revival superposition

    ``N^-1/2 sum c_rs c_r's' [|b w^r, b w^r'> + |-b w^r, -b w^r'>] |a1 w^s, a2 w^s'>``

    returned in mode order (probe1, probe2, bec1, bec2).
    """
    a1, a2 = bec_alphas
    cutoffs = dict(cutoffs or {})
    pc = cutoffs.get("probe", default_cutoff(beta))
    c1 = cutoffs.get("bec1", default_cutoff(a1))
    c2_ = cutoffs.get("bec2", default_cutoff(a2))
    c2 = revival_coeffs_2d(spec).c2
    N = spec.N
    w = np.exp(1j * spec.phases)
    # probe-pair and condensate-pair amplitudes per (r, s) index, pair n
    probe_amp = {}
    for r in range(N):
        for sgn in (1, -1):
            probe_amp[(r, sgn)] = coherent_amplitudes(sgn * beta * w[r], pc)
    bec_amp1 = [coherent_amplitudes(a1 * w[s], c1) for s in range(N)]
    bec_amp2 = [coherent_amplitudes(a2 * w[s], c2_) for s in range(N)]
    # factorized form: sum over sign of prod_n [sum_rs c_rs |sgn b w^r>|a_n w^s>]
    out = 0
    for sgn in (1, -1):
        pair1 = sum(
            c2[r, s] * np.multiply.outer(probe_amp[(r, sgn)], bec_amp1[s])
            for r in range(N)
            for s in range(N)
        )
        pair2 = sum(
            c2[r, s] * np.multiply.outer(probe_amp[(r, sgn)], bec_amp2[s])
            for r in range(N)
            for s in range(N)
        )
        # pair1 indices (p1, b1), pair2 (p2, b2) -> (p1, p2, b1, b2)
        out = out + np.einsum("ac,bd->abcd", pair1, pair2)
    modes = (
        ModeSpec("probe1", pc),
        ModeSpec("probe2", pc),
        ModeSpec("bec1", c1),
        ModeSpec("bec2", c2_),
    )
    return normalize(PureState(modes, out))[0]


def multiphoton_quarter_period(
    bec_alphas: tuple[complex, complex],
    beta: complex,
    cutoffs: dict[str, int] | None = None,
) -> PureState:
    """Target at ``K=-1, tau=pi/2``:

    ``|qB(b,b)>_+ (x) ||E(a1,-a2)> - i |qB(b,-b)>_+ (x) ||E(a1,a2)>_-``

    with normalized quasi-Bell probes and unnormalized condensate pairs,
    renormalized as a whole.
    """
    a1, a2 = bec_alphas
    cutoffs = dict(cutoffs or {})
    pc = cutoffs.get("probe", default_cutoff(beta))
    cut = (cutoffs.get("bec1", default_cutoff(a1)), cutoffs.get("bec2", default_cutoff(a2)))
    qpp = normalize(quasi_bell_unnormalized(beta, "PP", +1, ("probe1", "probe2"), pc))[0]
    qpm = normalize(quasi_bell_unnormalized(beta, "PM", +1, ("probe1", "probe2"), pc))[0]
    e_even = ecs_unnormalized(a1, -a2, +1, ("bec1", "bec2"), cut)
    e_odd = ecs_unnormalized(a1, a2, -1, ("bec1", "bec2"), cut)
    return normalize(tensor([qpp, e_even]) - tensor([qpm, e_odd]).scaled(1j))[0]
