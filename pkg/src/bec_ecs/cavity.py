"""Cavity-QED readout of the energy-entangled Bell pair ``(|0,0> +- |1,1>)/sqrt2``.

Each photon mode feeds a resonant cavity holding one two-level atom.  Atoms
are stored as Fock modes of cutoff 1 (``0 = g``, ``1 = e``) so the generic
state algebra applies.  In the interaction picture the coupling is

    H = -i (Omega / 2) (a s+ - a^dag s-)

which rotates ``|n, g>`` into ``|n-1, e>`` with
``U |1, g> = cos(Omega t / 2) |1, g> - sin(Omega t / 2) |0, e>``.  At
``Omega t = pi`` the two sign flips of ``|1,1>|g,g>`` cancel, so
``(|0,0> +- |1,1>)|g,g>`` maps to ``|0,0>(|g,g> +- |e,e>)`` with no extra
phase convention needed.

The readout pulse is ``exp(-i pi/4 sx)`` on atom 1 and its complex conjugate
on atom 2.  It fixes ``|gg> + |ee>`` and sends ``|gg> - |ee>`` to
``i(|ge> - |eg>)``, so coincident atomic records mean ``+`` and split
records mean ``-``.  A common rotation on both atoms cannot produce the
antisymmetric image because both inputs are swap symmetric; ``rotation="ry"``
applies ``exp(-i pi/4 sy)`` to both, which maps the minus state onto
``|ge> + |eg>`` and yields the same decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .fock_core import (
    DensityOperator,
    FockError,
    ModeSpec,
    PureState,
    apply_single_mode_unitary,
    apply_two_mode_unitary,
    tensor,
)

CAVITY_LABELS = ("cavity1", "cavity2")
ATOM_LABELS = ("atom1", "atom2")
RECORDS = ("gg", "ge", "eg", "ee")


def jc_unitary(omega_t: float, cavity_cutoff: int) -> np.ndarray:
    """Resonant coupling over the joint (cavity, atom) basis, row-major.

    The truncated generator omits only the coupling of ``|cutoff, e>`` to
    ``|cutoff + 1, g>``, so the result stays exactly unitary and block
    diagonal in the excitation number.
    """
    if omega_t < 0:
        raise ValueError("pulse area must be non-negative")
    d = cavity_cutoff + 1
    gen = np.zeros((2 * d, 2 * d))
    for n in range(1, d):
        # a s+ |n, g> = sqrt(n) |n-1, e>
        gen[(n - 1) * 2 + 1, n * 2] = math.sqrt(n)
    gen = gen - gen.T
    return expm(-0.5 * omega_t * gen).astype(np.complex128)


def sx_rotation(angle: float) -> np.ndarray:
    """``exp(-i angle sx / 2)`` on ``(g, e)``."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def sy_rotation(angle: float) -> np.ndarray:
    """``exp(-i angle sy / 2)`` on ``(g, e)``."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def readout_rotations(rotation: str = "conjugate") -> tuple[np.ndarray, np.ndarray]:
    if rotation == "conjugate":
        a = sx_rotation(math.pi / 2)
        return a, a.conj()
    if rotation == "ry":
        a = sy_rotation(math.pi / 2)
        return a, a
    raise ValueError(f"unknown readout rotation {rotation!r}")


def with_atoms(state: PureState, cavities: Sequence[str] = CAVITY_LABELS) -> PureState:
    """Append ground-state atoms; ``cavities`` name the photon modes."""
    atoms = PureState.vacuum([ModeSpec(lab, 1) for lab in ATOM_LABELS])
    for lab in cavities:
        state.axis(lab)
    return tensor([state, atoms])


def jc_evolve(
    state: PureState,
    omega_t: float,
    pairs: Sequence[tuple[str, str]] = tuple(zip(CAVITY_LABELS, ATOM_LABELS)),
) -> PureState:
    """Apply the resonant pulse of area ``omega_t`` to each (cavity, atom) pair."""
    out = state
    for cav, atom in pairs:
        if out.modes[out.axis(atom)].cutoff != 1:
            raise FockError(f"atom mode {atom!r} must have cutoff 1")
        c = out.modes[out.axis(cav)].cutoff
        out = apply_two_mode_unitary(out, cav, atom, jc_unitary(omega_t, c))
    return out


def rotate_atoms(state: PureState, rotation: str = "conjugate") -> PureState:
    a1, a2 = readout_rotations(rotation)
    out = apply_single_mode_unitary(state, ATOM_LABELS[0], a1)
    return apply_single_mode_unitary(out, ATOM_LABELS[1], a2)


def decision(record: str) -> str:
    return "plus" if record in ("gg", "ee") else "minus"


def readout_map(
    state: PureState,
    omega_t: float = math.pi,
    rotation: str = "conjugate",
    cavities: Sequence[str] = CAVITY_LABELS,
) -> PureState:
    """Full pulse sequence on ``state`` whose photon modes are ``cavities``.

    Returns the joint state with the atom modes appended.
    """
    mapping = dict(zip(cavities, CAVITY_LABELS))
    s = with_atoms(state.relabel(mapping))
    s = jc_evolve(s, omega_t)
    return rotate_atoms(s, rotation)


def record_amplitudes(state: PureState) -> dict[str, PureState]:
    """Unnormalized rest-of-system kets for each atomic record."""
    ia, ib = state.axis(ATOM_LABELS[0]), state.axis(ATOM_LABELS[1])
    rest = tuple(m for i, m in enumerate(state.modes) if i not in (ia, ib))
    psi = np.moveaxis(state.amplitudes, [ia, ib], [0, 1])
    return {
        rec: PureState(rest, psi["ge".index(rec[0]), "ge".index(rec[1])])
        for rec in RECORDS
    }


def _check_bell_subspace(state: PureState, modes: Sequence[str], tol: float = 1e-12) -> None:
    axes = [state.axis(m) for m in modes]
    p = np.moveaxis(state.probabilities(), axes, [0, 1])
    total = p.sum()
    inside = p[0, 0].sum() + (p[1, 1].sum() if p.shape[0] > 1 and p.shape[1] > 1 else 0.0)
    if total - inside > tol * max(total, 1.0):
        raise FockError("input has weight outside span{|0,0>, |1,1>} of the photon modes")


@dataclass(frozen=True)
class DiscriminationResult:
    record_probabilities: Mapping[str, float]
    p_plus: float
    p_minus: float

    @property
    def outcome(self) -> str:
        return "plus" if self.p_plus >= self.p_minus else "minus"

    @property
    def confidence(self) -> float:
        return max(self.p_plus, self.p_minus) / (self.p_plus + self.p_minus)


def _photon_frame(cutoff: int = 1) -> tuple[ModeSpec, ModeSpec]:
    return ModeSpec(CAVITY_LABELS[0], cutoff), ModeSpec(CAVITY_LABELS[1], cutoff)


def _readout_matrix(omega_t: float, rotation: str) -> np.ndarray:
    """Joint photon+atom unitary (16 x 16) for cavity cutoff 1."""
    modes = _photon_frame() + tuple(ModeSpec(lab, 1) for lab in ATOM_LABELS)
    cols = []
    for k in range(16):
        basis = PureState.basis(modes, np.unravel_index(k, (2, 2, 2, 2)))
        cols.append(rotate_atoms(jc_evolve(basis, omega_t), rotation).vector)
    return np.stack(cols, axis=1)


def discriminate(
    state: PureState | DensityOperator,
    omega_t: float = math.pi,
    rotation: str = "conjugate",
) -> DiscriminationResult:
    """Classify a two-mode photon state supported on ``|0,0>, |1,1>``.

    ``state`` may be pure or mixed; its two modes are the cavity inputs.
    """
    if len(state.modes) != 2:
        raise FockError("discriminate expects exactly two photon modes")
    shape = state.shape
    if min(shape) < 2:
        raise FockError("photon modes need cutoff >= 1")
    if isinstance(state, PureState):
        _check_bell_subspace(state, state.labels)
        rho = np.outer(state.vector, state.vector.conj())
    else:
        diag = np.real(np.diag(state.matrix)).reshape(shape)
        if diag.sum() - diag[0, 0] - diag[1, 1] > 1e-12:
            raise FockError("input has weight outside span{|0,0>, |1,1>}")
        rho = state.matrix
    # restrict to the cutoff-1 photon frame
    sub = [np.ravel_multi_index(ij, shape) for ij in ((0, 0), (0, 1), (1, 0), (1, 1))]
    r2 = rho[np.ix_(sub, sub)]
    r2 = r2 / np.trace(r2).real
    atoms0 = np.zeros((4, 4))
    atoms0[0, 0] = 1.0
    full = np.kron(r2, atoms0)
    u = _readout_matrix(omega_t, rotation)
    out = (u @ full @ u.conj().T).reshape(2, 2, 2, 2, 2, 2, 2, 2)
    # diagonal over atom records, traced over photons
    atom_p = np.einsum("abijabij->ij", out).real
    probs = {rec: float(atom_p["ge".index(rec[0]), "ge".index(rec[1])]) for rec in RECORDS}
    p_plus = probs["gg"] + probs["ee"]
    return DiscriminationResult(probs, p_plus, probs["ge"] + probs["eg"])


def confusion_matrix(omega_t: float = math.pi, rotation: str = "conjugate") -> np.ndarray:
    """Rows: inputs ``B+``, ``B-``; columns: decisions plus, minus."""
    rows = []
    for sign in (1, -1):
        amps = np.zeros((2, 2), dtype=np.complex128)
        amps[0, 0], amps[1, 1] = 1 / math.sqrt(2), sign / math.sqrt(2)
        res = discriminate(PureState(_photon_frame(), amps), omega_t, rotation)
        rows.append([res.p_plus, res.p_minus])
    return np.array(rows)


def detuned_confusion_oracle(omega_t: float) -> np.ndarray:
    """Closed-form confusion matrix of the conjugate readout for pulse area ``omega_t``."""
    s2 = math.sin(omega_t / 2) ** 2
    c2 = math.cos(omega_t / 2) ** 2
    return np.array([[(1 + s2) / 2, (1 - s2) / 2], [c2 / 2, 1 - c2 / 2]])
