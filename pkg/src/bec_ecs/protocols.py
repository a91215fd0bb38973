"""End-to-end entanglement transfer from probe light to two condensates.

Both schemes evolve the joint probe/condensate state to a revival time
``tau = 2 pi M / N``, measure the two probe modes and report the heralded
condensate states.  Where a closed form exists the heralded states are
compared against it after normalization.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .cavity import RECORDS, decision, readout_map, record_amplitudes
from .dynamics import (
    ChannelParams,
    RevivalSpec,
    evolve_multiphoton_channel,
    evolve_single_photon_channel,
    revival_coeffs_1d,
)
from .fock_core import (
    DensityOperator,
    FockError,
    PureState,
    coherent_norm_deficit,
    default_cutoff,
    fidelity,
    fix_global_phase,
    normalize,
)
from .optics import QB_CLASSES, quasi_bell_analyzer
from .states import coherent_pair_sum, ecs_unnormalized, quasi_bell_unnormalized

BEC_LABELS = ("bec1", "bec2")
PURE_TOL = 1e-9


@dataclass(frozen=True)
class ProtocolConfig:
    """Parameters of one protocol run.

    ``scheme`` is ``"single_photon"`` or ``"multiphoton"``.  ``measurement``
    selects the probe readout: ``"bell"`` or ``"cavity"`` for the single-photon
    scheme, ``"physical"`` (50:50 splitter and photon counting) or ``"ideal"``
    (projection on the symmetrically orthogonalized quasi-Bell frame) for the
    multiphoton scheme, or ``"unambiguous"`` (the dual-frame POVM that never
    confuses two quasi-Bell states, at the price of an inconclusive outcome).
    """

    scheme: str
    alpha1: complex = 1.0
    alpha2: complex = 1.0
    beta: complex = 1.0
    theta: float = math.pi / 4
    phi: float = 0.0
    K: float = 1.0
    M: int = 1
    N: int = 4
    cutoffs: Mapping[str, int] = field(default_factory=dict)
    measurement: str | None = None

    def __post_init__(self):
        if self.scheme not in ("single_photon", "multiphoton"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if int(self.N) != self.N or self.N < 1 or int(self.M) != self.M:
            raise ValueError("M and N must be integers with N >= 1")
        if self.scheme == "single_photon":
            allowed = ("bell", "cavity")
        else:
            allowed = ("physical", "ideal", "unambiguous")
        if self.measurement is not None and self.measurement not in allowed:
            raise ValueError(f"measurement for {self.scheme} must be one of {allowed}")
        for v in (self.theta, self.phi, self.K):
            if not math.isfinite(v):
                raise ValueError("theta, phi and K must be finite")

    @property
    def tau(self) -> float:
        return 2.0 * math.pi * self.M / self.N

    @property
    def readout(self) -> str:
        if self.measurement is not None:
            return self.measurement
        return "bell" if self.scheme == "single_photon" else "physical"

    @property
    def revival_spec(self) -> RevivalSpec | None:
        """Spec when the revival closed forms apply, else ``None``."""
        if float(self.K) != int(self.K) or math.gcd(int(self.M), int(self.N)) != 1:
            return None
        return RevivalSpec(int(self.M), int(self.N), int(self.K))

    @property
    def worked_case(self) -> bool:
        k = -1 if self.scheme == "multiphoton" else 1
        return (self.K, self.N, self.M % self.N) == (k, 4, 1)


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    label: str
    probability: float
    state: PureState | None
    density: DensityOperator | None = None

    @property
    def purity(self) -> float:
        if self.density is None:
            return 1.0 if self.state is not None else float("nan")
        return self.density.purity()


@dataclass(frozen=True, eq=False)
class ProtocolReport:
    outcomes: tuple[MeasurementOutcome, ...]
    fidelities: Mapping[str, float]
    entanglement: Mapping[str, float]
    metadata: Mapping[str, object]
    fidelity_details: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    def outcome(self, label: str) -> MeasurementOutcome:
        for o in self.outcomes:
            if o.label == label:
                return o
        raise KeyError(label)

    @property
    def total_probability(self) -> float:
        return float(sum(o.probability for o in self.outcomes))


def entanglement_entropy(state: PureState, partition) -> float:
    """Entropy (bits) of the reduced state on ``partition`` for a pure ``state``."""
    if isinstance(state, DensityOperator):
        raise FockError("entanglement entropy is defined here for pure states only")
    part = set(partition)
    labels = state.labels
    if not part or not part < set(labels):
        raise FockError("partition must be a nonempty proper subset of the modes")
    keep = [state.axis(lab) for lab in labels if lab in part]
    rest = [state.axis(lab) for lab in labels if lab not in part]
    dk = math.prod(state.shape[i] for i in keep)
    mat = np.transpose(state.amplitudes, keep + rest).reshape(dk, -1)
    sv = np.linalg.svd(mat, compute_uv=False)
    p = sv**2 / np.sum(sv**2)
    p = p[p > 1e-300]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def _entropy_of(outcome: MeasurementOutcome) -> float:
    if outcome.state is None:
        return float("nan")
    if outcome.density is not None and abs(outcome.density.purity() - 1.0) > PURE_TOL:
        return float("nan")
    return entanglement_entropy(outcome.state, {BEC_LABELS[0]})


def _outcome_from_density(label: str, rho: DensityOperator | None) -> MeasurementOutcome:
    if rho is None:
        return MeasurementOutcome(label, 0.0, None)
    p = rho.trace()
    if p <= 1e-14:
        return MeasurementOutcome(label, max(p, 0.0), None)
    norm = rho.normalized()
    return MeasurementOutcome(label, p, norm.dominant_state(), norm)


def _outcome_from_ket(label: str, ket: PureState) -> MeasurementOutcome:
    p = ket.norm() ** 2
    if p <= 1e-28:
        return MeasurementOutcome(label, p, None)
    return MeasurementOutcome(label, p, fix_global_phase(normalize(ket)[0]))


def _bec_cutoffs(config: ProtocolConfig) -> tuple[int, int]:
    return (
        int(config.cutoffs.get("bec1", default_cutoff(config.alpha1))),
        int(config.cutoffs.get("bec2", default_cutoff(config.alpha2))),
    )


def _fid(outcome: MeasurementOutcome, target: PureState) -> float:
    if outcome.state is None:
        return float("nan")
    if outcome.density is not None:
        return fidelity(outcome.density, target)
    return fidelity(outcome.state, target)


def single_photon_targets(config: ProtocolConfig) -> dict[str, dict[str, PureState]]:
    """Analytic heralded states per Bell outcome.

    ``revival``: ``sum C(+-)_{r1 r2} |a1 w^r1, a2 w^r2>`` with
    ``C(+-) = cos(t) c_r1 c_r2 +- sin(t) e^{ip} c'_r1 c'_r2``.
    ``ecs`` (``K=1, tau=pi/2`` only): ``C+- ||E(a1,-a2)> + i C-+ ||E(a1,a2)>_-``.
    ``ecs_even``: the even ECS ``E(a1, -+a2)`` for both outcomes.
    """
    spec = config.revival_spec
    out: dict[str, dict[str, PureState]] = {"B+": {}, "B-": {}}
    if spec is None:
        return out
    a1, a2 = config.alpha1, config.alpha2
    cut = _bec_cutoffs(config)
    cc = revival_coeffs_1d(spec)
    w = np.exp(1j * spec.phases)
    e = math.sin(config.theta) * np.exp(1j * config.phi)
    for lab, s in (("B+", 1), ("B-", -1)):
        terms = [
            (
                math.cos(config.theta) * cc.c[i] * cc.c[j] + s * e * cc.c_prime[i] * cc.c_prime[j],
                a1 * w[i],
                a2 * w[j],
            )
            for i in range(spec.N)
            for j in range(spec.N)
        ]
        out[lab]["revival"] = coherent_pair_sum(terms, BEC_LABELS, cut)
    if config.worked_case:
        c_plus = math.cos(config.theta) + e
        c_minus = math.cos(config.theta) - e
        even = ecs_unnormalized(a1, -a2, +1, BEC_LABELS, cut)
        odd = ecs_unnormalized(a1, a2, -1, BEC_LABELS, cut)
        out["B+"]["ecs"] = even.scaled(c_plus) + odd.scaled(1j * c_minus)
        out["B-"]["ecs"] = even.scaled(c_minus) + odd.scaled(1j * c_plus)
        out["B+"]["ecs_even"] = ecs_unnormalized(a1, -a2, +1, BEC_LABELS, cut)
        out["B-"]["ecs_even"] = ecs_unnormalized(a1, a2, +1, BEC_LABELS, cut)
    return out


def _truncation(config: ProtocolConfig, cut: Mapping[str, int]) -> dict[str, float]:
    est = {
        "bec1": coherent_norm_deficit(config.alpha1, cut["bec1"]),
        "bec2": coherent_norm_deficit(config.alpha2, cut["bec2"]),
    }
    if "probe" in cut:
        # probe modes carry coherent components of amplitude |beta|
        est["probe"] = coherent_norm_deficit(config.beta, cut["probe"])
    return est


def _assemble(config, outcomes, targets, timings, cut, primary_order) -> ProtocolReport:
    fidelities: dict[str, float] = {}
    details: dict[str, dict[str, float]] = {}
    for o in outcomes:
        tdict = targets.get(o.label, {})
        if not tdict:
            continue
        details[o.label] = {name: _fid(o, t) for name, t in tdict.items()}
        for name in primary_order:
            if name in tdict:
                fidelities[o.label] = details[o.label][name]
                break
    entanglement = {o.label: _entropy_of(o) for o in outcomes}
    meta = {
        "scheme": config.scheme,
        "measurement": config.readout,
        "tau": config.tau,
        "K": config.K,
        "M": config.M,
        "N": config.N,
        "cutoffs": dict(cut),
        "truncation": _truncation(config, cut),
        "timings": timings,
    }
    return ProtocolReport(tuple(outcomes), fidelities, entanglement, meta, details)


def run_single_photon(config: ProtocolConfig) -> ProtocolReport:
    """Single-photon channel followed by a Bell measurement on the probes.

    ``measurement="bell"`` projects on ``B+-``; ``"cavity"`` runs the
    cavity-QED readout and groups atomic records by decision.
    """
    if config.scheme != "single_photon":
        raise ValueError("run_single_photon needs scheme='single_photon'")
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    params = ChannelParams(config.K, config.tau)
    cut = _bec_cutoffs(config)
    state = evolve_single_photon_channel(
        (config.alpha1, config.alpha2), (config.theta, config.phi), params, 1, cut
    )
    timings["evolve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if config.readout == "bell":
        a = state.amplitudes
        modes = state.modes[2:]
        outcomes = [
            _outcome_from_ket(lab, PureState(modes, (a[0, 0] + s * a[1, 1]) / math.sqrt(2)))
            for lab, s in (("B+", 1), ("B-", -1))
        ]
    else:
        mapped = readout_map(state, cavities=("probe1", "probe2"))
        recs = record_amplitudes(mapped)
        outcomes = []
        for lab, dec in (("B+", "plus"), ("B-", "minus")):
            cols = []
            for rec in RECORDS:
                if decision(rec) != dec:
                    continue
                # rest modes: cavity1, cavity2, bec1, bec2
                amps = recs[rec].amplitudes
                cols.extend(amps[i, j].reshape(-1) for i in range(2) for j in range(2))
            m = np.stack(cols, axis=1)
            rho = DensityOperator(state.modes[2:], m @ m.conj().T)
            outcomes.append(_outcome_from_density(lab, rho))
    timings["measure"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    targets = single_photon_targets(config)
    timings["targets"] = time.perf_counter() - t0
    cmap = {"probe": 1, "bec1": cut[0], "bec2": cut[1]}
    return _assemble(config, outcomes, targets, timings, cmap, ("ecs", "revival"))


def lowdin_frame(beta: complex, cutoff: int) -> dict[str, PureState]:
    """Symmetric orthonormalization of the four quasi-Bell states.

    ``V = Q G^{-1/2}`` with ``Q`` the normalized states and ``G`` their Gram
    matrix; among orthonormal frames of the same span this one is closest to
    the originals.
    """
    labels = QB_CLASSES[:4]
    q, modes = _qb_matrix(beta, cutoff)
    g = q.conj().T @ q
    w, u = np.linalg.eigh(g)
    v = q @ (u @ np.diag(w**-0.5) @ u.conj().T)
    return {lab: PureState(modes, v[:, i]) for i, lab in enumerate(labels)}


def _qb_matrix(beta: complex, cutoff: int) -> tuple[np.ndarray, tuple]:
    if beta == 0:
        raise FockError("quasi-Bell states are degenerate at beta = 0")
    vecs = []
    modes = None
    for lab in QB_CLASSES[:4]:
        s = normalize(quasi_bell_unnormalized(beta, lab[:2], lab[2], ("probe1", "probe2"), cutoff))[0]
        vecs.append(s.vector)
        modes = s.modes
    return np.stack(vecs, axis=1), modes


def dual_frame_povm(beta: complex, cutoff: int) -> tuple[dict[str, PureState], float]:
    """Unambiguous-discrimination elements ``s |d_k><d_k|`` for the quasi-Bell states.

    ``d_k = Q G^{-1}`` is biorthogonal to the normalized states, and ``s``
    is the largest uniform weight keeping the elements below the identity.
    Returns the unscaled duals and ``s``.
    """
    q, modes = _qb_matrix(beta, cutoff)
    g = q.conj().T @ q
    d = q @ np.linalg.inv(g)
    s = 1.0 / np.linalg.eigvalsh(np.linalg.inv(g)).max()
    return {lab: PureState(modes, d[:, i]) for i, lab in enumerate(QB_CLASSES[:4])}, float(s)


def multiphoton_targets(config: ProtocolConfig) -> dict[str, dict[str, PureState]]:
    """Heralded targets at ``K=-1, tau=pi/2``: ``||E(a1,-a2)>`` for PP+ and
    ``||E(a1,a2)>_-`` for PM+."""
    if not config.worked_case:
        return {}
    cut = _bec_cutoffs(config)
    a1, a2 = config.alpha1, config.alpha2
    return {
        "PP+": {"ecs": ecs_unnormalized(a1, -a2, +1, BEC_LABELS, cut)},
        "PM+": {"ecs": ecs_unnormalized(a1, a2, -1, BEC_LABELS, cut)},
    }


def run_multiphoton(config: ProtocolConfig) -> ProtocolReport:
    """Even quasi-Bell probes, evolution, then quasi-Bell analysis of the probes."""
    if config.scheme != "multiphoton":
        raise ValueError("run_multiphoton needs scheme='multiphoton'")
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    cut = _bec_cutoffs(config)
    pc = int(config.cutoffs.get("probe", default_cutoff(config.beta)))
    cutoffs = {"probe": pc, "bec1": cut[0], "bec2": cut[1]}
    params = ChannelParams(config.K, config.tau)
    state = evolve_multiphoton_channel((config.alpha1, config.alpha2), config.beta, params, cutoffs)
    timings["evolve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    outcomes: list[MeasurementOutcome] = []
    if config.readout == "physical":
        res = quasi_bell_analyzer(state, "probe1", "probe2")
        for lab in QB_CLASSES:
            outcomes.append(_outcome_from_density(lab, res.conditional[lab]))
    else:
        if config.readout == "ideal":
            frame, weight, rest = lowdin_frame(config.beta, pc), 1.0, "unresolved"
        else:
            frame, weight = dual_frame_povm(config.beta, pc)
            rest = "inconclusive"
        psi = state.amplitudes.reshape(state.shape[0] * state.shape[1], -1)
        total = 0.0
        for lab, v in frame.items():
            ket = PureState(state.modes[2:], math.sqrt(weight) * (v.vector.conj() @ psi))
            o = _outcome_from_ket(lab, ket)
            total += o.probability
            outcomes.append(o)
        outcomes.append(MeasurementOutcome(rest, max(0.0, 1.0 - total), None))
    timings["measure"] = time.perf_counter() - t0

    targets = multiphoton_targets(config)
    return _assemble(config, outcomes, targets, timings, cutoffs, ("ecs",))


def run_protocol(config: ProtocolConfig) -> ProtocolReport:
    if config.scheme == "single_photon":
        return run_single_photon(config)
    return run_multiphoton(config)
