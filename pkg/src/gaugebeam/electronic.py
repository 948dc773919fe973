"""Three-level Lambda system: Hamiltonian, dark/bright/dressed states, mixing angle.

Level order everywhere is (|1>, |2>, |3>): two ground states and the
excited state.  The probe drives 1-3 and the control drives 2-3.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateSystemError, ParameterError, PoleError
from .fields import NATURAL, PhysicalConstants


@dataclass(frozen=True)
class ElectronicHamiltonian:
    omega_p: complex
    omega_c: complex
    eps21: float = 0.0
    eps31: float = 0.0


def hamiltonian_matrix(h: ElectronicHamiltonian, constants: PhysicalConstants = NATURAL):
    """Rotating-frame Hamiltonian as a complex matrix.

    Broadcasts over array-valued Rabi frequencies; the result has shape
    ``broadcast_shape + (3, 3)``.
    """
    hbar = constants.hbar
    op, oc, e21, e31 = np.broadcast_arrays(np.asarray(h.omega_p, complex), np.asarray(h.omega_c, complex),
                                           np.asarray(h.eps21, float), np.asarray(h.eps31, float))
    m = np.zeros(op.shape + (3, 3), dtype=complex)
    m[..., 1, 1] = e21
    m[..., 2, 2] = e31
    m[..., 2, 0] = -hbar * op
    m[..., 0, 2] = -hbar * np.conj(op)
    m[..., 2, 1] = -hbar * oc
    m[..., 1, 2] = -hbar * np.conj(oc)
    return m


def dark_state(zeta):
    """Normalised dark state (1, -zeta)/sqrt(1+|zeta|^2) on the ground manifold."""
    z = np.asarray(zeta, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise PoleError("dark_state needs finite zeta; use the mixing-angle form at a pole")
    norm = np.sqrt(1 + np.abs(z) ** 2)
    return np.stack([1 / norm + 0j, -z / norm], axis=-1)


def bright_state(zeta):
    z = np.asarray(zeta, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise PoleError("bright_state needs finite zeta")
    norm = np.sqrt(1 + np.abs(z) ** 2)
    return np.stack([np.conj(z) / norm, 1 / norm + 0j], axis=-1)


@dataclass(frozen=True)
class ElectronicEigensystem:
    """Resonant eigensystem.  ``energies`` is ordered (dark, +, -)."""

    dark: np.ndarray
    bright: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    energies: tuple
    total_rabi: float

    def vectors(self):
        """Rows are |D>, |+>, |-> embedded in the three-level space."""
        d = np.append(self.dark, 0.0)
        return np.array([d, self.plus, self.minus])


def eigensystem(omega_p: complex, omega_c: complex, constants: PhysicalConstants = NATURAL):
    """Dark, bright and dressed states at one- and two-photon resonance.

    Works directly with the Rabi frequencies, so a vanishing control field
    (|zeta| infinite) is handled.  The dressed states are
    (|B> -/+ e^{i arg Omega_c}|3>)/sqrt(2) with energies +/- hbar*Omega; the
    control phase factor is what makes them eigenstates for the -hbar
    coupling sign of the Hamiltonian.
    """
    op, oc = complex(omega_p), complex(omega_c)
    total = np.hypot(abs(op), abs(oc))
    if total == 0:
        raise DegenerateSystemError("total Rabi frequency is zero: adiabatic frame undefined")
    chi = np.exp(1j * np.angle(oc))
    dark = np.array([abs(oc), -op * np.conj(chi)]) / total
    bright = np.array([np.conj(op) * chi, abs(oc)]) / total
    b3 = np.append(bright, 0.0)
    e3 = np.array([0, 0, 1.0]) * chi
    plus = (b3 - e3) / np.sqrt(2)
    minus = (b3 + e3) / np.sqrt(2)
    hbar = constants.hbar
    return ElectronicEigensystem(dark, bright, plus, minus, (0.0, hbar * total, -hbar * total), total)


@dataclass(frozen=True)
class MixingAngle:
    alpha: np.ndarray
    cos2alpha: np.ndarray


def mixing_angle(zeta_abs) -> MixingAngle:
    """alpha with sin(alpha) = 1/sqrt(1+|zeta|^2), cos(alpha) = |zeta|/sqrt(1+|zeta|^2).

    ``np.inf`` is accepted and maps to alpha = 0, cos 2 alpha = 1.
    """
    a = np.asarray(zeta_abs, dtype=float)
    if np.any(a < 0) or np.any(np.isnan(a)):
        raise ParameterError("|zeta| must be >= 0")
    alpha = np.arctan2(1.0, a)
    with np.errstate(invalid="ignore"):
        a2 = a * a
        c2 = np.where(np.isinf(a), 1.0, (a2 - 1) / (a2 + 1))
    if np.ndim(c2) == 0:
        return MixingAngle(float(alpha), float(c2))
    return MixingAngle(alpha, c2)


def cos2alpha_from_abs2(abs2):
    """cos 2 alpha from |zeta|^2, written as 1 - 2/(1+|zeta|^2) to stay accurate for large ratios."""
    a2 = np.asarray(abs2, dtype=float)
    return np.where(np.isinf(a2), 1.0, 1 - 2 / (1 + a2))


@dataclass(frozen=True)
class TrapPotentials:
    """State-dependent trapping potentials V_j(points) for j = 1, 2, 3."""

    v1: Callable
    v2: Callable
    v3: Optional[Callable] = None

    @classmethod
    def constant(cls, v1=0.0, v2=0.0, v3=0.0):
        def const(c):
            return lambda pts: np.full(np.asarray(pts).shape[:-1], float(c))
        return cls(const(v1), const(v2), const(v3))

    @classmethod
    def zero(cls):
        return cls.constant()

    def matrix(self, points):
        """Diagonal operator V on the three levels, shape (..., 3, 3)."""
        pts = np.asarray(points, dtype=float)
        v3 = self.v3(pts) if self.v3 is not None else np.zeros(pts.shape[:-1])
        diag = np.stack(np.broadcast_arrays(self.v1(pts), self.v2(pts), v3), axis=-1)
        out = np.zeros(diag.shape + (3,), dtype=complex)
        for k in range(3):
            out[..., k, k] = diag[..., k]
        return out


def dark_trapping_potential(traps: TrapPotentials, zeta_abs2, points):
    """U = (V1 + |zeta|^2 V2)/(1 + |zeta|^2); tends to V2 as |zeta|^2 -> inf."""
    a2 = np.asarray(zeta_abs2, dtype=float)
    if np.any(a2 < 0):
        raise ParameterError("|zeta|^2 must be >= 0")
    v1 = np.asarray(traps.v1(points), dtype=float)
    v2 = np.asarray(traps.v2(points), dtype=float)
    w = 1 / (1 + a2)
    return np.where(np.isinf(a2), v2, w * v1 + (1 - w) * v2)


def numeric_eigensystem(omega_p, omega_c, constants: PhysicalConstants = NATURAL, eps21=0.0, eps31=0.0):
    """Diagonalise the Hamiltonian numerically; returns (energies, vectors).

    Energies are ascending, vectors are columns.  Broadcasts over stacks.
    """
    h = hamiltonian_matrix(ElectronicHamiltonian(omega_p, omega_c, eps21, eps31), constants)
    return np.linalg.eigh(h)
