"""Constructors for the named states used throughout the package.

Two-mode coherent superpositions are built in closed form from coherent
amplitudes, never by evolving something else, so they can serve as
independent targets for the dynamics and measurement code.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .fock_core import (
    COHERENT_DEFICIT_TOL,
    FockError,
    ModeSpec,
    PureState,
    coherent_norm_deficit,
    default_cutoff,
    fix_global_phase,
    normalize,
    required_cutoff,
    tensor,
)


class PairType(enum.Enum):
    """Quasi-Bell family: PP is ``|b,b> +- |-b,-b>``, PM is ``|b,-b> +- |-b,b>``."""

    PP = "PP"
    PM = "PM"


@dataclass(frozen=True)
class CoherentParams:
    alpha: complex
    cutoff: int | None = None

    def resolved_cutoff(self) -> int:
        return default_cutoff(self.alpha) if self.cutoff is None else int(self.cutoff)


def _sign(sign) -> int:
    if sign in (+1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"sign must be +1/-1 or '+'/'-', got {sign!r}")


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Truncated ``exp(-|a|^2/2) a^n / sqrt(n!)`` for n = 0..cutoff."""
    n = np.arange(cutoff + 1)
    alpha = complex(alpha)
    if alpha == 0:
        out = np.zeros(cutoff + 1, dtype=np.complex128)
        out[0] = 1.0
        return out
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent(
    p: CoherentParams | complex, label: str = "a", check: bool = True
) -> PureState:
    """Single-mode Glauber coherent state.

    Raises :class:`FockError` when the cutoff leaves a norm deficit of
    ``1e-10`` or more, reporting the cutoff that would suffice.
    """
    if not isinstance(p, CoherentParams):
        p = CoherentParams(p)
    c = p.resolved_cutoff()
    if check:
        deficit = coherent_norm_deficit(p.alpha, c)
        if deficit >= COHERENT_DEFICIT_TOL:
            need = required_cutoff(p.alpha)
            raise FockError(
                f"cutoff {c} too small for |alpha|={abs(p.alpha):.4g} "
                f"(norm deficit {deficit:.2e}); need cutoff >= {need}"
            )
    return PureState((ModeSpec(label, c),), coherent_amplitudes(p.alpha, c))


def product_coherent(
    alphas: Sequence[complex], labels: Sequence[str], cutoffs: Sequence[int] | None = None
) -> PureState:
    if cutoffs is None:
        cutoffs = [None] * len(alphas)
    return tensor(
        [coherent(CoherentParams(a, c), lab) for a, lab, c in zip(alphas, labels, cutoffs)]
    )


def entangled_single_photon(
    theta: float,
    phi: float,
    labels: Sequence[str] = ("probe1", "probe2"),
    cutoff: int = 1,
) -> PureState:
    """``cos(theta)|0,0> + sin(theta) e^{i phi}|1,1>``, phases exactly as written."""
    if cutoff < 1:
        raise FockError("entangled single-photon state needs cutoff >= 1")
    if not (math.isfinite(theta) and math.isfinite(phi)):
        raise ValueError("theta and phi must be finite")
    modes = (ModeSpec(labels[0], cutoff), ModeSpec(labels[1], cutoff))
    amps = np.zeros((cutoff + 1, cutoff + 1), dtype=np.complex128)
    amps[0, 0] = math.cos(theta)
    amps[1, 1] = math.sin(theta) * np.exp(1j * phi)
    return PureState(modes, amps)


def optical_bell(
    sign, labels: Sequence[str] = ("probe1", "probe2"), cutoff: int = 1
) -> PureState:
    """``(|0,0> +- |1,1>)/sqrt(2)``."""
    return entangled_single_photon(_sign(sign) * math.pi / 4, 0.0, labels, cutoff)


def coherent_pair_sum(
    terms: Sequence[tuple[complex, complex, complex]],
    labels: Sequence[str],
    cutoffs: Sequence[int],
) -> PureState:
    """Unnormalized ``sum_k w_k |a_k, b_k>`` for ``terms = [(w, a, b), ...]``."""
    ca, cb = cutoffs
    amps = np.zeros((ca + 1, cb + 1), dtype=np.complex128)
    for w, a, b in terms:
        amps += w * np.multiply.outer(coherent_amplitudes(a, ca), coherent_amplitudes(b, cb))
    return PureState((ModeSpec(labels[0], ca), ModeSpec(labels[1], cb)), amps)


def _pair_cutoffs(alpha, beta, cutoffs):
    if cutoffs is None:
        return (default_cutoff(alpha), default_cutoff(beta))
    return tuple(int(c) for c in cutoffs)


def ecs_unnormalized(
    alpha: complex,
    beta: complex,
    sign=+1,
    labels: Sequence[str] = ("bec1", "bec2"),
    cutoffs: Sequence[int] | None = None,
) -> PureState:
    """``|alpha, beta> +- |-alpha, -beta>`` with no normalization."""
    s = _sign(sign)
    return coherent_pair_sum(
        [(1.0, alpha, beta), (s, -alpha, -beta)], labels, _pair_cutoffs(alpha, beta, cutoffs)
    )


def ecs_norm_squared(alpha: complex, beta: complex, sign=+1) -> float:
    """Analytic squared norm of ``|alpha,beta> +- |-alpha,-beta>``."""
    return 2.0 * (1.0 + _sign(sign) * math.exp(-2.0 * (abs(alpha) ** 2 + abs(beta) ** 2)))


def entangled_coherent(
    alpha: complex,
    beta: complex,
    sign=+1,
    labels: Sequence[str] = ("bec1", "bec2"),
    cutoffs: Sequence[int] | None = None,
) -> PureState:
    """Normalized entangled coherent state ``(|a,b> +- |-a,-b>)/sqrt(N)``."""
    s = _sign(sign)
    if s < 0 and alpha == 0 and beta == 0:
        raise FockError("odd entangled coherent state with alpha = beta = 0 is the zero vector")
    raw = ecs_unnormalized(alpha, beta, s, labels, cutoffs)
    return fix_global_phase(normalize(raw)[0])


def quasi_bell_unnormalized(
    beta: complex,
    kind: PairType | str,
    sign=+1,
    labels: Sequence[str] = ("probe1", "probe2"),
    cutoff: int | None = None,
) -> PureState:
    kind = PairType(kind)
    c = default_cutoff(beta) if cutoff is None else int(cutoff)
    second = beta if kind is PairType.PP else -beta
    return coherent_pair_sum(
        [(1.0, beta, second), (_sign(sign), -beta, -second)], labels, (c, c)
    )


def quasi_bell_norm_squared(beta: complex, sign=+1) -> float:
    return 2.0 + 2.0 * _sign(sign) * math.exp(-4.0 * abs(beta) ** 2)


def quasi_bell(
    beta: complex,
    kind: PairType | str,
    sign=+1,
    labels: Sequence[str] = ("probe1", "probe2"),
    cutoff: int | None = None,
) -> PureState:
    """Normalized quasi-Bell state of the PP or PM family."""
    if _sign(sign) < 0 and beta == 0:
        raise FockError("odd quasi-Bell state with beta = 0 is the zero vector")
    raw = quasi_bell_unnormalized(beta, kind, sign, labels, cutoff)
    return fix_global_phase(normalize(raw)[0])


def quasi_bell_overlap(beta: complex) -> float:
    """Analytic overlap of the even PP and PM quasi-Bell states, ``1/cosh(2|b|^2)``."""
    return 1.0 / math.cosh(2.0 * abs(beta) ** 2)


def cat(beta: complex, sign=+1, cutoff: int | None = None, label: str = "a") -> PureState:
    """Normalized single-mode even (+) or odd (-) cat ``|b> +- |-b>``."""
    s = _sign(sign)
    if s < 0 and beta == 0:
        raise FockError("odd cat state with beta = 0 is the zero vector")
    c = default_cutoff(beta) if cutoff is None else int(cutoff)
    amps = coherent_amplitudes(beta, c) + s * coherent_amplitudes(-beta, c)
    return fix_global_phase(normalize(PureState((ModeSpec(label, c),), amps))[0])


def cat_pair_overlap(beta: complex, n_phases: int, r, rp, s, sp) -> complex:
    """Analytic overlap between two-mode cats with phases ``2 pi k / N``:

    ``<C(b w^r, b w^r')|C(b w^s, b w^s')> = 4 e^{-2|b|^2} cosh(|b|^2 (w^(s-r) + w^(s'-r')))``.
    """
    w = lambda k: np.exp(2j * math.pi * k / n_phases)  # noqa: E731
    x = abs(beta) ** 2
    return complex(4.0 * math.exp(-2.0 * x) * np.cosh(x * (w(s - r) + w(sp - rp))))


def two_mode_squeezed_pair(
    q: float,
    cutoff: int | None = None,
    labels: Sequence[str] = ("probe1", "probe2", "aux3", "aux4"),
    second_order: bool = False,
) -> PureState:
    """Two independent two-mode squeezed vacua on (1,2) and (3,4).

    By default the exact series ``(1-q^2) sum q^(n+m) |n,n>|m,m>`` up to the
    cutoff, without renormalization.  ``second_order=True`` returns the
    unnormalized expansion kept to order ``q^2``:
    ``|0000> + q(|0011>+|1100>) + q^2(|0022>+|1111>+|2200>)``.
    """
    if not 0.0 <= q < 1.0:
        raise ValueError(f"squeezing parameter must satisfy 0 <= q < 1, got {q}")
    if cutoff is None:
        cutoff = 2 if second_order else tms_cutoff(q)
    if second_order and cutoff < 2:
        raise FockError("second-order expansion needs cutoff >= 2")
    modes = tuple(ModeSpec(lab, cutoff) for lab in labels)
    d = cutoff + 1
    amps = np.zeros((d, d, d, d), dtype=np.complex128)
    if second_order:
        for n, m in [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]:
            amps[n, n, m, m] = q ** (n + m)
    else:
        for n in range(d):
            for m in range(d):
                amps[n, n, m, m] = (1.0 - q * q) * q ** (n + m)
    return PureState(modes, amps)


def tms_cutoff(q: float, tol: float = 1e-12) -> int:
    """Smallest cutoff with ``3 q^(2(c+1)) < tol``."""
    if q == 0.0:
        return 2
    c = 2
    while 3.0 * q ** (2 * (c + 1)) >= tol:
        c += 1
    return c
