"""Dense algebra on multimode truncated Fock spaces.

States are immutable values: every operation returns a new object and the
underlying arrays are flagged read-only.  The joint basis is row-major in the
declared mode order, so ``amplitudes[n1, n2, ...]`` is the amplitude of
``|n1, n2, ...>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import special

DEFAULT_NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
COHERENT_DEFICIT_TOL = 1e-10


class FockError(ValueError):
    """Raised for malformed states, mode mismatches and invalid operators."""


def default_cutoff(alpha: complex) -> int:
    """Per-mode cutoff for a coherent amplitude routed through a mode."""
    a = abs(alpha)
    return int(math.ceil(a * a + 6.0 * a + 10.0))


def coherent_norm_deficit(alpha: complex, cutoff: int) -> float:
    """Probability weight of a coherent state above ``cutoff`` (Poisson tail)."""
    x = abs(alpha) ** 2
    if x == 0.0:
        return 0.0
    # P(n > cutoff) = regularized lower incomplete gamma P(cutoff + 1, x)
    return float(special.gammainc(cutoff + 1, x))


def required_cutoff(alpha: complex, tol: float = COHERENT_DEFICIT_TOL) -> int:
    c = 0
    while coherent_norm_deficit(alpha, c) >= tol:
        c += 1
    return c


@dataclass(frozen=True)
class ModeSpec:
    label: str
    cutoff: int

    def __post_init__(self):
        if not isinstance(self.label, str) or not self.label:
            raise FockError(f"mode label must be a non-empty string, got {self.label!r}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 0:
            raise FockError(f"cutoff must be a non-negative integer, got {self.cutoff!r}")

    @property
    def dim(self) -> int:
        return self.cutoff + 1


def _as_modes(modes: Iterable[ModeSpec]) -> tuple[ModeSpec, ...]:
    modes = tuple(modes)
    labels = [m.label for m in modes]
    if len(set(labels)) != len(labels):
        raise FockError(f"duplicate mode labels: {labels}")
    return modes


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """Ket over the joint truncated Fock basis of ``modes``."""

    modes: tuple[ModeSpec, ...]
    amplitudes: np.ndarray
    norm_tol: float = DEFAULT_NORM_TOL

    def __post_init__(self):
        modes = _as_modes(self.modes)
        amps = _frozen(self.amplitudes)
        shape = tuple(m.dim for m in modes)
        if amps.size != math.prod(shape):
            raise FockError(
                f"amplitude count {amps.size} does not match mode dimensions {shape}"
            )
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "amplitudes", _frozen(amps.reshape(shape)))

    @classmethod
    def basis(cls, modes: Sequence[ModeSpec], index: Sequence[int]) -> "PureState":
        modes = _as_modes(modes)
        amps = np.zeros(tuple(m.dim for m in modes), dtype=np.complex128)
        amps[tuple(index)] = 1.0
        return cls(modes, amps)

    @classmethod
    def vacuum(cls, modes: Sequence[ModeSpec]) -> "PureState":
        return cls.basis(modes, [0] * len(tuple(modes)))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(m.dim for m in self.modes)

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise FockError(f"no mode {label!r} in {self.labels}") from None

    def scaled(self, c: complex) -> "PureState":
        return PureState(self.modes, c * self.amplitudes, self.norm_tol)

    def __add__(self, other: "PureState") -> "PureState":
        _check_same_modes(self, other)
        return PureState(self.modes, self.amplitudes + other.amplitudes, self.norm_tol)

    def __sub__(self, other: "PureState") -> "PureState":
        return self + other.scaled(-1.0)

    def __rmul__(self, c: complex) -> "PureState":
        return self.scaled(c)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mean_number(self, label: str) -> float:
        ax = self.axis(label)
        p = self.probabilities()
        other = tuple(i for i in range(p.ndim) if i != ax)
        marginal = p.sum(axis=other)
        return float(np.dot(np.arange(marginal.size), marginal) / p.sum())

    def relabel(self, mapping: Mapping[str, str]) -> "PureState":
        modes = tuple(ModeSpec(mapping.get(m.label, m.label), m.cutoff) for m in self.modes)
        return PureState(modes, self.amplitudes, self.norm_tol)

    def reorder(self, labels: Sequence[str]) -> "PureState":
        """Permute tensor axes so the modes appear in ``labels`` order."""
        if sorted(labels) != sorted(self.labels):
            raise FockError(f"cannot reorder {self.labels} into {tuple(labels)}")
        perm = [self.axis(lab) for lab in labels]
        return PureState(
            tuple(self.modes[i] for i in perm),
            np.transpose(self.amplitudes, perm),
            self.norm_tol,
        )

    def with_cutoffs(self, cutoffs: Mapping[str, int]) -> "PureState":
        """Zero-pad or truncate the named modes to new cutoffs."""
        modes = tuple(ModeSpec(m.label, cutoffs.get(m.label, m.cutoff)) for m in self.modes)
        out = np.zeros(tuple(m.dim for m in modes), dtype=np.complex128)
        sl = tuple(slice(0, min(a.dim, b.dim)) for a, b in zip(self.modes, modes))
        out[sl] = self.amplitudes[sl]
        return PureState(modes, out, self.norm_tol)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian operator over the joint Fock basis of ``modes``.

    ``matrix`` is indexed by row-major flattened multi-indices.
    """

    modes: tuple[ModeSpec, ...]
    matrix: np.ndarray
    herm_tol: float = 1e-10

    def __post_init__(self):
        modes = _as_modes(self.modes)
        dim = math.prod(m.dim for m in modes)
        mat = _frozen(self.matrix)
        if mat.shape != (dim, dim):
            raise FockError(f"density matrix shape {mat.shape} does not match dimension {dim}")
        if np.max(np.abs(mat - mat.conj().T), initial=0.0) > self.herm_tol:
            raise FockError("density operator is not Hermitian within tolerance")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityOperator":
        v = state.vector
        return cls(state.modes, np.outer(v, v.conj()))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(m.dim for m in self.modes)

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def normalized(self) -> "DensityOperator":
        tr = self.trace()
        if tr <= 1e-14:
            raise FockError("cannot normalize a numerically zero operator")
        return DensityOperator(self.modes, self.matrix / tr, self.herm_tol)

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.matrix)

    def is_psd(self, tol: float = 1e-8) -> bool:
        return bool(self.eigh()[0].min() >= -tol)

    def purity(self) -> float:
        m = self.matrix
        return float(np.real(np.vdot(m.conj().T, m)) / self.trace() ** 2)

    def dominant_state(self) -> PureState:
        """Eigenvector of the largest eigenvalue, with the phase convention of
        :func:`fix_global_phase`."""
        w, v = self.eigh()
        return fix_global_phase(PureState(self.modes, v[:, -1].reshape(self.shape)))

    def expectation(self, state: PureState) -> complex:
        _check_same_modes(self, state)
        v = state.vector
        return complex(np.vdot(v, self.matrix @ v))


def _check_same_modes(a, b) -> None:
    if tuple(a.modes) != tuple(b.modes):
        raise FockError(f"mode mismatch: {a.modes} vs {b.modes}")


def fix_global_phase(state: PureState, tol: float = 1e-12) -> PureState:
    """Rotate so the lowest nonzero multi-index carries a real positive amplitude."""
    v = state.vector
    nz = np.flatnonzero(np.abs(v) > tol * max(1.0, np.abs(v).max(initial=0.0)))
    if nz.size == 0:
        return state
    a = v[nz[0]]
    return state.scaled(abs(a) / a)


def tensor(parts: Sequence[PureState]) -> PureState:
    """Tensor product with concatenated mode order."""
    parts = list(parts)
    if not parts:
        raise FockError("tensor of an empty sequence")
    modes = _as_modes(m for p in parts for m in p.modes)
    amps = parts[0].amplitudes
    for p in parts[1:]:
        amps = np.multiply.outer(amps, p.amplitudes)
    return PureState(modes, amps, parts[0].norm_tol)


def inner(a: PureState, b: PureState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _check_same_modes(a, b)
    return complex(np.vdot(a.vector, b.vector))


def fidelity(a: PureState | DensityOperator, b: PureState) -> float:
    """Fidelity of ``a`` with the pure state ``b``; inputs need not be normalized."""
    if isinstance(a, DensityOperator):
        return float(np.real(a.expectation(b)) / (a.trace() * b.norm() ** 2))
    return abs(inner(a, b)) ** 2 / (a.norm() ** 2 * b.norm() ** 2)


def normalize(state: PureState) -> tuple[PureState, float]:
    n = state.norm()
    if n <= 1e-14:
        raise FockError("cannot normalize a numerically zero state")
    return state.scaled(1.0 / n), n


def index_grids(state: PureState) -> list[np.ndarray]:
    """Broadcastable occupation-number grids, one per mode."""
    return list(np.ogrid[tuple(slice(0, d) for d in state.shape)])


def apply_diagonal(
    state: PureState, phase_fn: Callable[..., np.ndarray]
) -> PureState:
    """Multiply each amplitude by ``exp(i * phase_fn(n1, n2, ...))``.

    ``phase_fn`` receives one broadcastable integer array per mode (in mode
    order) and must return the real phase for every multi-index.
    """
    phase = np.broadcast_to(np.asarray(phase_fn(*index_grids(state)), dtype=float), state.shape)
    return PureState(state.modes, state.amplitudes * np.exp(1j * phase), state.norm_tol)


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> None:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise FockError(f"operator must be square, got shape {u.shape}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if dev > tol:
        raise FockError(f"operator is not unitary: max |U^dag U - I| = {dev:.3e}")


def apply_operator(
    state: PureState, labels: Sequence[str], op: np.ndarray, unitary: bool = False
) -> PureState:
    """Apply ``op`` (over the joint basis of ``labels``, row-major) to those modes.

    With ``unitary=True`` the operator is checked before use.
    """
    labels = list(labels)
    axes = [state.axis(lab) for lab in labels]
    if len(set(axes)) != len(axes):
        raise FockError(f"repeated mode in {labels}")
    sub_shape = tuple(state.shape[a] for a in axes)
    d = math.prod(sub_shape)
    op = np.asarray(op, dtype=np.complex128)
    if op.shape != (d, d):
        raise FockError(f"operator shape {op.shape} does not match modes {labels} (dim {d})")
    if unitary:
        check_unitary(op)
    psi = np.moveaxis(state.amplitudes, axes, list(range(len(axes))))
    rest = psi.shape[len(axes):]
    out = (op @ psi.reshape(d, -1)).reshape(sub_shape + rest)
    out = np.moveaxis(out, list(range(len(axes))), axes)
    return PureState(state.modes, out, state.norm_tol)


def apply_two_mode_unitary(
    state: PureState, mode_a: str, mode_b: str, u: np.ndarray
) -> PureState:
    """Apply a unitary over the joint (mode_a, mode_b) basis, row-major in that order."""
    return apply_operator(state, [mode_a, mode_b], u, unitary=True)


def apply_single_mode_unitary(state: PureState, mode: str, u: np.ndarray) -> PureState:
    return apply_operator(state, [mode], u, unitary=True)


def project(state: PureState, outcome: Mapping[str, int]) -> PureState:
    """Unnormalized conditional state of the remaining modes after finding
    the given occupation numbers."""
    if not outcome:
        raise FockError("empty projection outcome")
    idx = [slice(None)] * len(state.modes)
    for lab, n in outcome.items():
        ax = state.axis(lab)
        if not 0 <= n < state.shape[ax]:
            raise FockError(f"occupation {n} outside cutoff of mode {lab!r}")
        idx[ax] = n
    keep = tuple(m for m in state.modes if m.label not in outcome)
    if not keep:
        raise FockError("projection must leave at least one mode")
    return PureState(keep, state.amplitudes[tuple(idx)], state.norm_tol)


def partial_trace(
    rho: DensityOperator | PureState, keep: Iterable[str]
) -> DensityOperator:
    """Reduced operator on ``keep``; kept modes stay in their original order."""
    keep = set(keep)
    if not keep:
        raise FockError("partial trace needs a nonempty set of kept modes")
    labels = rho.labels
    unknown = keep - set(labels)
    if unknown:
        raise FockError(f"unknown modes {sorted(unknown)}")
    kept_axes = [i for i, lab in enumerate(labels) if lab in keep]
    traced_axes = [i for i, lab in enumerate(labels) if lab not in keep]
    kept_modes = tuple(rho.modes[i] for i in kept_axes)
    dk = math.prod(m.dim for m in kept_modes)

    if isinstance(rho, PureState):
        psi = np.transpose(rho.amplitudes, kept_axes + traced_axes).reshape(dk, -1)
        return DensityOperator(kept_modes, psi @ psi.conj().T)

    n = len(labels)
    t = rho.matrix.reshape(rho.shape + rho.shape)
    # contract each traced ket axis with its bra partner
    letters = "abcdefghijklmnopqrstuvwxyz"
    ket = [letters[i] for i in range(n)]
    bra = [letters[n + i] if i in kept_axes else letters[i] for i in range(n)]
    out = "".join(ket[i] for i in kept_axes) + "".join(bra[i] for i in kept_axes)
    red = np.einsum("".join(ket) + "".join(bra) + "->" + out, t)
    mat = red.reshape(dk, dk)
    return DensityOperator(kept_modes, 0.5 * (mat + mat.conj().T))


def von_neumann_entropy(rho: DensityOperator, base: float = 2.0) -> float:
    w = np.clip(np.real(np.linalg.eigvalsh(rho.matrix / rho.trace())), 0.0, None)
    w = w[w > 1e-300]
    return float(-np.sum(w * np.log(w)) / math.log(base))


def number_operator(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff + 1, dtype=float)).astype(np.complex128)


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1).astype(np.complex128)
