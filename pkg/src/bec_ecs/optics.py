"""Linear optics and photodetection.

Beam splitters follow the Heisenberg convention

    U a_1^dag U^dag = t a_1^dag - r* a_2^dag
    U a_2^dag U^dag = r a_1^dag + t* a_2^dag

so ``|alpha>|0> -> |t alpha>|-r* alpha>``.  On-off detectors of efficiency
``eta`` click on ``n`` photons with probability ``1 - (1 - eta)^n``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm, schur

from .fock_core import (
    DensityOperator,
    FockError,
    ModeSpec,
    PureState,
    apply_two_mode_unitary,
    fidelity,
    project,
)
from .states import optical_bell, two_mode_squeezed_pair

HERALD_LABELS = ("probe1", "probe2", "aux3", "aux4")


@dataclass(frozen=True)
class BeamSplitterParams:
    r: complex
    t: complex

    def __post_init__(self):
        s = abs(self.r) ** 2 + abs(self.t) ** 2
        if abs(s - 1.0) > 1e-12:
            raise ValueError(f"|r|^2 + |t|^2 = {s!r}, expected 1")

    @classmethod
    def balanced(cls) -> "BeamSplitterParams":
        return cls(1 / math.sqrt(2), 1 / math.sqrt(2))

    @property
    def single_photon_matrix(self) -> np.ndarray:
        """Action on ``(|1,0>, |0,1>)``; columns are the images."""
        r, t = complex(self.r), complex(self.t)
        return np.array([[t, r], [-r.conjugate(), t.conjugate()]], dtype=np.complex128)


def _block_generators(n: int) -> tuple[np.ndarray, ...]:
    """Matrices of a1^dag a1, a1^dag a2, a2^dag a1, a2^dag a2 on the
    ``n``-photon block, basis ``|k, n-k>`` ordered by ``k``."""
    k = np.arange(n + 1, dtype=float)
    n11 = np.diag(k)
    n22 = np.diag(n - k)
    # a1^dag a2 |k, n-k> = sqrt((k+1)(n-k)) |k+1, n-k-1>
    up = np.diag(np.sqrt((k[:-1] + 1) * (n - k[:-1])), -1)
    return n11, up, up.T.copy(), n22


@functools.lru_cache(maxsize=64)
def _beam_splitter_cached(r: complex, t: complex, ca: int, cb: int) -> np.ndarray:
    s1 = BeamSplitterParams(r, t).single_photon_matrix
    # a unitary is normal, so its complex Schur form is diagonal
    tri, z = schur(s1, output="complex")
    gen = z @ np.diag(1j * np.angle(np.diag(tri))) @ z.conj().T
    gen = 0.5 * (gen - gen.conj().T)
    if np.max(np.abs(expm(gen) - s1)) > 1e-10:
        raise FockError("could not find an anti-Hermitian generator for the beam splitter")
    da, db = ca + 1, cb + 1
    u = np.zeros((da * db, da * db), dtype=np.complex128)
    for n in range(ca + cb + 1):
        n11, n12, n21, n22 = _block_generators(n)
        block = expm(gen[0, 0] * n11 + gen[0, 1] * n12 + gen[1, 0] * n21 + gen[1, 1] * n22)
        ks = [k for k in range(n + 1) if k <= ca and n - k <= cb]
        sub = block[np.ix_(ks, ks)]
        if len(ks) < n + 1:
            # truncated block: nearest unitary keeps the operator exactly unitary
            w, _, vh = np.linalg.svd(sub)
            sub = w @ vh
        idx = [k * db + (n - k) for k in ks]
        u[np.ix_(idx, idx)] = sub
    u.flags.writeable = False
    return u


def beam_splitter_unitary(bs: BeamSplitterParams, dims: Sequence[int]) -> np.ndarray:
    """Two-mode unitary for cutoffs ``dims = (cutoff_a, cutoff_b)``.

    Photon-number blocks that fit entirely inside the truncation are exact;
    blocks cut by the truncation are replaced by the unitary polar factor of
    their retained part.
    """
    ca, cb = (int(d) for d in dims)
    return _beam_splitter_cached(complex(bs.r), complex(bs.t), ca, cb).copy()


def apply_beam_splitter(
    state: PureState, mode_a: str, mode_b: str, bs: BeamSplitterParams
) -> PureState:
    ca = state.modes[state.axis(mode_a)].cutoff
    cb = state.modes[state.axis(mode_b)].cutoff
    return apply_two_mode_unitary(state, mode_a, mode_b, beam_splitter_unitary(bs, (ca, cb)))


@dataclass(frozen=True)
class DetectorModel:
    eta: float = 1.0
    mode: str = "aux3"

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.eta}")

    def click_probability(self, n) -> np.ndarray:
        return 1.0 - (1.0 - self.eta) ** np.asarray(n, dtype=float)


def onoff_click_povm(model: DetectorModel, cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal (no_click, click) POVM elements on ``0..cutoff`` photons."""
    n = np.arange(cutoff + 1, dtype=float)
    no_click = (1.0 - model.eta) ** n
    return np.diag(no_click), np.diag(1.0 - no_click)


# --- heralded single-photon Bell source ---------------------------------------


def chi_coefficients(
    bs1: BeamSplitterParams, bs2: BeamSplitterParams, eta: float, tabulated: bool = False
) -> tuple[complex, complex, complex, complex, complex]:
    """Amplitudes ``(chi1..chi5)`` of the heralded second-order state

    ``q chi1 |00,11> + q^2 [chi2 |11,11> + chi3 |10,12> + chi4 |00,22> + chi5 |01,21>]``

    with kets written ``|n1 n2, n3 n4>``.  By default the coefficients are
    those of the detector-filtered state.  ``tabulated=True`` returns the
    tabulated closed forms, which differ in chi3 and chi4.
    """
    r1, t1, r2, t2 = (complex(x) for x in (bs1.r, bs1.t, bs2.r, bs2.t))
    c = np.conjugate
    e2 = eta * eta
    one_two = eta * eta * (2.0 - eta)
    chi1 = (c(r1) * c(r2) + c(t1) * c(t2)) * e2
    chi2 = (
        2 * r1 * r2 * c(t1) * c(t2)
        + 2 * t1 * t2 * c(r1) * c(r2)
        + (1 - 2 * abs(r1) ** 2) * (1 - 2 * abs(r2) ** 2)
    ) * e2
    chi5 = math.sqrt(2) * (
        r2 * c(t2) * c(t1) ** 2 - t2 * c(r2) * c(r1) ** 2 - c(r1) * c(t1) * (1 - 2 * abs(r2) ** 2)
    ) * one_two
    if tabulated:
        chi3 = math.sqrt(2) * (
            r1 * c(t1) * c(t2) ** 2
            - c(r1) * c(t1) * c(r2) ** 2
            - c(r2) * c(t2) * (1 - 2 * abs(r1) ** 2)
        ) * one_two
        chi4 = (c(r1) * c(r2) - c(t1) * c(t2)) ** 2 * one_two
    else:
        chi3 = math.sqrt(2) * (
            r1 * c(t1) * c(t2) ** 2
            - t1 * c(r1) * c(r2) ** 2
            - c(r2) * c(t2) * (1 - 2 * abs(r1) ** 2)
        ) * one_two
        chi4 = (c(r1) * c(r2) + c(t1) * c(t2)) ** 2 * (eta * (2.0 - eta)) ** 2
    return complex(chi1), complex(chi2), complex(chi3), complex(chi4), complex(chi5)


def herald_probabilities(q: float, chis: Sequence[complex]) -> dict[str, float]:
    """Component weights ``P_psi, P_10, P_00, P_01`` from the chi coefficients."""
    a = [abs(x) ** 2 for x in chis]
    sigma = a[0] + q * q * (a[1] + a[2] + a[3] + a[4])
    if sigma == 0.0:
        raise FockError("all heralding amplitudes vanish")
    return {
        "psi": (a[0] + q * q * a[1]) / sigma,
        "10": q * q * a[2] / sigma,
        "00": q * q * a[3] / sigma,
        "01": q * q * a[4] / sigma,
    }


def heralded_target(chis: Sequence[complex], q: float) -> PureState:
    """Normalized ``chi1 |00> + q chi2 |11>`` on (probe1, probe2)."""
    amps = np.zeros((2, 2), dtype=np.complex128)
    amps[0, 0], amps[1, 1] = chis[0], q * chis[1]
    n = np.linalg.norm(amps)
    if n == 0:
        raise FockError("heralded target vanishes")
    return PureState((ModeSpec("probe1", 1), ModeSpec("probe2", 1)), amps / n)


def bell_beam_splitters(q: float, sign=+1) -> tuple[BeamSplitterParams, BeamSplitterParams]:
    """Splitters that herald ``(|00> +- |11>)/sqrt(2)``.

    The second splitter is fully reflecting (``t2 = 0, r2 = 1``).  The first
    solves ``q chi2 = +- chi1`` exactly, giving
    ``r1 = -+(sqrt(1 + 8 q^2) - 1) / (4 q)`` which is ``-+q`` to leading order.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("Bell splitters need 0 < q < 1")
    s = 1 if sign in (1, "+") else -1
    r1 = -s * (math.sqrt(1.0 + 8.0 * q * q) - 1.0) / (4.0 * q)
    return BeamSplitterParams(r1, math.sqrt(1.0 - r1 * r1)), BeamSplitterParams(1.0, 0.0)


def success_probability(q: float, eta: float) -> tuple[float, float, float, float]:
    """Closed-form ``(P_psi, P_01, P_10, P_00)`` for the Bell-source splitters."""
    if not 0.0 <= q < 1.0:
        raise ValueError("q must satisfy 0 <= q < 1")
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    x = (2.0 - eta) ** 2
    den = 2.0 + q * q * (4.0 - 3.0 * q * q) * x
    p01 = 2.0 * q * q * (1.0 - q * q) * x / den
    return 2.0 / den, p01, p01, q**4 * x / den


@dataclass(frozen=True, eq=False)
class HeraldReport:
    """Outcome of the heralded Bell-source simulation.

    Probabilities are conditional on both detectors clicking.  ``components``
    maps a detector photon pattern ``(n3, n4)`` to its conditional weight.
    """

    rho12: DensityOperator | None
    p_psi: float
    p_00: float
    p_01: float
    p_10: float
    p_other: float
    p_herald: float
    heralded_state: PureState | None
    fidelity_to_target: float
    psi_component: DensityOperator | None = None
    components: Mapping[tuple[int, int], float] = field(default_factory=dict)
    model: str = "amplitude"

    @property
    def degenerate(self) -> bool:
        return self.rho12 is None

    def probabilities(self) -> dict[str, float]:
        return {
            "psi": self.p_psi,
            "00": self.p_00,
            "01": self.p_01,
            "10": self.p_10,
            "other": self.p_other,
        }


# detector pattern (n3, n4) of each named component, keyed by total photons
_PATTERN_CLASS = {(1, 1): "psi", (1, 2): "10", (2, 1): "01", (2, 2): "00"}


def _nan_report(model: str, target: PureState | None) -> HeraldReport:
    nan = float("nan")
    return HeraldReport(None, nan, nan, nan, nan, nan, 0.0, None, nan, model=model)


def herald_pipeline(
    q: float,
    bs1: BeamSplitterParams,
    bs2: BeamSplitterParams,
    eta: float,
    model: str = "amplitude",
    target: PureState | None = None,
    cutoff: int | None = None,
) -> HeraldReport:
    """Brute-force heralded Bell source.

    Builds the source, mixes (probe1, aux3) on ``bs1`` and (probe2, aux4) on
    ``bs2``, heralds on clicks of detectors on aux3 and aux4, and traces the
    detected modes out.

    ``model="amplitude"`` uses the second-order source and weights each detector
    pattern by the squared click probability, which is what applying the
    click operator to the ket produces.  ``model="povm"`` uses the exact
    squeezed series and weights patterns by the click probability itself.

    The report's ``fidelity_to_target`` compares the dominant eigenvector of
    the ``(1, 1)`` pattern component with ``target`` (default: the
    normalized ``chi1|00> + q chi2|11>``).
    """
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must satisfy 0 <= q < 1, got {q}")
    if model not in ("amplitude", "povm"):
        raise ValueError(f"unknown herald model {model!r}")
    det = DetectorModel(eta)
    if target is None and q > 0:
        target = heralded_target(chi_coefficients(bs1, bs2, eta), q)

    src = two_mode_squeezed_pair(q, cutoff, HERALD_LABELS, second_order=(model == "amplitude"))
    mixed = apply_beam_splitter(src, "probe1", "aux3", bs1)
    mixed = apply_beam_splitter(mixed, "probe2", "aux4", bs2)

    power = 2 if model == "amplitude" else 1
    c3 = mixed.modes[mixed.axis("aux3")].cutoff
    c4 = mixed.modes[mixed.axis("aux4")].cutoff
    rho = None
    psi_part = None
    weights: dict[tuple[int, int], float] = {}
    for n3 in range(1, c3 + 1):
        for n4 in range(1, c4 + 1):
            w = (det.click_probability(n3) * det.click_probability(n4)) ** power
            phi = project(mixed, {"aux3": n3, "aux4": n4})
            v = phi.vector
            weight = float(w * np.vdot(v, v).real)
            if weight == 0.0:
                continue
            part = w * np.outer(v, v.conj())
            weights[(n3, n4)] = weight
            rho = part if rho is None else rho + part
            if (n3, n4) == (1, 1):
                psi_part = part
    p_herald = sum(weights.values())
    if rho is None or p_herald < 1e-300:
        return _nan_report(model, target)

    modes12 = mixed.modes[:2]
    rho12 = DensityOperator(modes12, rho / p_herald)
    frac = {k: v / p_herald for k, v in weights.items()}
    named = {name: frac.get(pat, 0.0) for pat, name in _PATTERN_CLASS.items()}
    p_other = float(max(0.0, 1.0 - sum(named.values())))

    heralded = None
    fid = float("nan")
    psi_rho = None
    if psi_part is not None:
        psi_rho = DensityOperator(modes12, psi_part / np.trace(psi_part).real)
        heralded = psi_rho.dominant_state()
        if target is not None:
            fid = fidelity(psi_rho, _pad_to(target, modes12))
    return HeraldReport(
        rho12=rho12,
        p_psi=named["psi"],
        p_00=named["00"],
        p_01=named["01"],
        p_10=named["10"],
        p_other=p_other,
        p_herald=float(p_herald),
        heralded_state=heralded,
        fidelity_to_target=fid,
        psi_component=psi_rho,
        components=frac,
        model=model,
    )


def _pad_to(state: PureState, modes: Sequence[ModeSpec]) -> PureState:
    return state.with_cutoffs({m.label: m.cutoff for m in modes})


def bell_target(sign=+1) -> PureState:
    return optical_bell(sign)


# --- quasi-Bell analyzer ------------------------------------------------------

QB_CLASSES = ("PP+", "PP-", "PM+", "PM-", "ambiguous")


def classify_counts(n_a: int, n_b: int) -> str:
    """Map photon counts after the 50:50 splitter to a quasi-Bell label.

    The splitter sends ``|b, b>`` to ``|sqrt2 b, 0>`` and ``|b, -b>`` to
    ``|0, -sqrt2 b>``.  Even (``+``) combinations therefore leave an even cat
    and odd (``-``) combinations an odd cat in the occupied output.
    """
    if n_a > 0 and n_b == 0:
        return "PP+" if n_a % 2 == 0 else "PP-"
    if n_a == 0 and n_b > 0:
        return "PM+" if n_b % 2 == 0 else "PM-"
    return "ambiguous"


@dataclass(frozen=True, eq=False)
class AnalyzerResult:
    """Outcome distribution of the quasi-Bell analyzer.

    ``counts`` holds the joint photon-number distribution after the splitter;
    ``conditional`` maps each class to the unnormalized density operator of
    the remaining modes (``None`` when no modes remain).
    """

    probabilities: Mapping[str, float]
    counts: np.ndarray
    conditional: Mapping[str, DensityOperator | None]
    output_state: PureState

    def normalized_conditional(self, label: str) -> DensityOperator | None:
        rho = self.conditional.get(label)
        if rho is None or rho.trace() <= 1e-14:
            return None
        return rho.normalized()


def quasi_bell_analyzer(
    state: PureState,
    mode_a: str,
    mode_b: str,
    bs: BeamSplitterParams | None = None,
    keep_conditionals: bool = True,
) -> AnalyzerResult:
    """50:50 splitter on ``(mode_a, mode_b)`` then photon counting in both."""
    for lab in (mode_a, mode_b):
        state.axis(lab)
    bs = BeamSplitterParams.balanced() if bs is None else bs
    out = apply_beam_splitter(state, mode_a, mode_b, bs)
    ia, ib = out.axis(mode_a), out.axis(mode_b)
    rest_axes = [i for i in range(len(out.modes)) if i not in (ia, ib)]
    psi = np.transpose(out.amplitudes, [ia, ib] + rest_axes)
    da, db = psi.shape[:2]
    flat = psi.reshape(da, db, -1)
    counts = np.einsum("abk,abk->ab", flat, flat.conj()).real

    probs = dict.fromkeys(QB_CLASSES, 0.0)
    members: dict[str, list[tuple[int, int]]] = {k: [] for k in QB_CLASSES}
    for na in range(da):
        for nb in range(db):
            lab = classify_counts(na, nb)
            probs[lab] += float(counts[na, nb])
            members[lab].append((na, nb))

    conditional: dict[str, DensityOperator | None] = dict.fromkeys(QB_CLASSES)
    if rest_axes and keep_conditionals:
        rest_modes = tuple(out.modes[i] for i in rest_axes)
        for lab, pats in members.items():
            cols = np.stack([flat[na, nb] for na, nb in pats], axis=1)
            conditional[lab] = DensityOperator(rest_modes, cols @ cols.conj().T)
    return AnalyzerResult(probs, counts, conditional, out)
