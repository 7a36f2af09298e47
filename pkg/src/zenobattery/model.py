"""Physical objects of the modulator-charger-battery system.

Basis convention: single-qubit order is (|0>, |1>) with ``sigma_z|0> = +|0>``,
and three-qubit operators are ordered modulator ⊗ charger ⊗ battery.

The modulator-charger Hamiltonian is written in its general two-parameter
form: ``gamma`` is the ratio of its two distinct eigenvalue magnitudes and
``mu`` an overall scale.  ``gamma = mu = 1`` gives

    H_mc = -w0 Z_m + w0 X_m X_c

whose spectrum is (-sqrt2, -sqrt2, sqrt2, sqrt2) w0.
"""
from __future__ import annotations

import dataclasses
import math
from enum import IntEnum

import numpy as np

from . import qcore
from .errors import IndexOutOfRangeError, ParameterError

I2 = np.eye(2, dtype=np.complex128)
KET0 = np.array([1.0, 0.0], dtype=np.complex128)
KET1 = np.array([0.0, 1.0], dtype=np.complex128)
KET_PLUS = np.array([1.0, 1.0], dtype=np.complex128) / math.sqrt(2.0)
KET_MINUS = np.array([1.0, -1.0], dtype=np.complex128) / math.sqrt(2.0)

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    # i|1><0| - i|0><1|
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    # raising operator |1><0|
    "plus": np.array([[0, 0], [1, 0]], dtype=np.complex128),
    # lowering operator |0><1|
    "minus": np.array([[0, 1], [0, 0]], dtype=np.complex128),
}


class Qubit(IntEnum):
    """Tensor slot of each qubit; the ordering is fixed across the package."""

    MODULATOR = 0
    CHARGER = 1
    BATTERY = 2


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Physical constants, in any consistent frequency unit (usually ``omega0 = 1``).

    Attributes:
        omega0: modulator-charger energy scale.
        omega1: battery frequency; the battery splitting is ``2 * omega1``.
            ``None`` selects the pulsed-resonance value ``lambda3 / 2``.
        g: charger-battery coupling.
        gamma: eigenvalue ratio ``lambda2 / lambda1`` of the modulator-charger
            Hamiltonian.
        mu: overall scale of the modulator-charger Hamiltonian.
    """

    omega0: float = 1.0
    omega1: float | None = None
    g: float = 0.01
    gamma: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        for name in ("omega0", "g", "gamma", "mu"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be a finite positive number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.omega1 is None:
            object.__setattr__(self, "omega1", self.resonant_omega1)
        elif not (math.isfinite(self.omega1) and self.omega1 > 0):
            raise ParameterError(f"omega1 must be a finite positive number, got {self.omega1!r}")
        else:
            object.__setattr__(self, "omega1", float(self.omega1))

    @property
    def theta(self) -> float:
        """Rotation angle of the tilde states, ``arctan(gamma) / 2``."""
        return math.atan(self.gamma) / 2.0

    @property
    def lambda4(self) -> float:
        return 2.0 * self.mu * self.omega0 / math.sqrt(1.0 + self.gamma**2)

    @property
    def lambda3(self) -> float:
        return self.gamma * self.lambda4

    @property
    def lambda2(self) -> float:
        return -self.lambda3

    @property
    def lambda1(self) -> float:
        return -self.lambda4

    @property
    def eigenvalues(self) -> tuple[float, float, float, float]:
        """(lambda1, lambda2, lambda3, lambda4) in the order of the closed-form eigenbasis."""
        return (self.lambda1, self.lambda2, self.lambda3, self.lambda4)

    @property
    def resonant_omega1(self) -> float:
        return self.mu * self.gamma * self.omega0 / math.sqrt(1.0 + self.gamma**2)

    @property
    def bare_resonant_omega1(self) -> float:
        """Battery frequency matching the unpulsed ``v1 <-> v3`` transition."""
        return (self.lambda3 - self.lambda1) / 2.0

    @property
    def capacity(self) -> float:
        """Battery level splitting ``2 * omega1``, the largest storable energy."""
        return 2.0 * self.omega1

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)


def pauli(axis: str) -> np.ndarray:
    """Single-qubit operator: ``x``, ``y``, ``z``, ``plus`` (|1><0|) or ``minus`` (|0><1|)."""
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}; choose from {sorted(_PAULI)}") from None


def embed(op, q: int, n: int = 3) -> np.ndarray:
    """Place the 2x2 operator ``op`` on slot ``q`` of an ``n``-qubit register."""
    if n not in (2, 3):
        raise IndexOutOfRangeError(f"only 2- or 3-qubit registers are supported, got n={n}")
    q = int(q)
    if not 0 <= q < n:
        raise IndexOutOfRangeError(f"qubit slot {q} out of range for n={n}")
    op = qcore.as_matrix(op)
    if op.shape != (2, 2):
        raise ValueError("embed expects a single-qubit (2x2) operator")
    return qcore.kron_all(*[op if k == q else I2 for k in range(n)])


def rotation(p: ModelParams) -> np.ndarray:
    """``exp(i sigma_y theta) = cos(theta) 1 + i sin(theta) sigma_y``."""
    th = p.theta
    return math.cos(th) * I2 + 1j * math.sin(th) * _PAULI["y"]


def tilde_state(psi, p: ModelParams) -> np.ndarray:
    return rotation(p) @ qcore.as_state(psi)


def build_hmc(p: ModelParams) -> np.ndarray:
    """Modulator-charger Hamiltonian (4x4 on m ⊗ c)."""
    g2 = p.gamma**2
    x, z = _PAULI["x"], _PAULI["z"]
    local = (1.0 - g2) / (1.0 + g2) * x + 2.0 * p.gamma / (1.0 + g2) * z
    return -p.mu * p.omega0 * np.kron(local, I2) + p.mu * p.omega0 * np.kron(x, x)


def build_hb(p: ModelParams) -> np.ndarray:
    """Battery Hamiltonian ``omega1 (1 - sigma_z)``, ground energy 0."""
    return p.omega1 * (I2 - _PAULI["z"])


def build_hmcb(p: ModelParams) -> np.ndarray:
    """Full three-qubit Hamiltonian (8x8): modulator-charger term, flip-flop coupling, battery bias."""
    sp, sm = _PAULI["plus"], _PAULI["minus"]
    exchange = qcore.kron_all(I2, sp, sm) + qcore.kron_all(I2, sm, sp)
    return (
        np.kron(build_hmc(p), I2)
        + 2.0 * p.g * exchange
        - p.omega1 * embed(_PAULI["z"], Qubit.BATTERY, 3)
    )


def charger_energy_operator(p: ModelParams) -> np.ndarray:
    """``H_mc ⊗ 1`` on the three-qubit space; its expectation is E^c."""
    return np.kron(build_hmc(p), I2)


def battery_energy_operator(p: ModelParams) -> np.ndarray:
    """``1 ⊗ 1 ⊗ H_b``; its expectation is E^b."""
    return qcore.kron_all(I2, I2, build_hb(p))


def eigenbasis_mc(p: ModelParams) -> list[tuple[np.ndarray, float]]:
    """Closed-form eigenpairs ``(v_i, lambda_i)`` of ``build_hmc``, ordered v1..v4.

    v1 = |+~>|->, v2 = |0~>|+>, v3 = |1~>|+>, v4 = |-~>|->.
    """
    r = rotation(p)
    return [
        (np.kron(r @ KET_PLUS, KET_MINUS), p.lambda1),
        (np.kron(r @ KET0, KET_PLUS), p.lambda2),
        (np.kron(r @ KET1, KET_PLUS), p.lambda3),
        (np.kron(r @ KET_MINUS, KET_MINUS), p.lambda4),
    ]


def pulse_operator(p: ModelParams, n: int = 3) -> np.ndarray:
    """Control pulse ``|0~><0~| - |1~><1~|`` on the modulator, identity elsewhere."""
    r = rotation(p)
    t0, t1 = r @ KET0, r @ KET1
    local = np.outer(t0, t0.conj()) - np.outer(t1, t1.conj())
    return embed(local, Qubit.MODULATOR, n)


def initial_state(p: ModelParams) -> np.ndarray:
    """``|v3> ⊗ |0>``: charger excited, battery empty."""
    v3 = eigenbasis_mc(p)[2][0]
    return np.kron(v3, KET0)


def effective_charger_h(p: ModelParams, traceless: bool = True) -> np.ndarray:
    """Charger Hamiltonian seen with the modulator frozen in ``|1~>``.

    The partial matrix element ``<1~|H_mc|1~>`` equals ``(lambda3/2)(1 + sigma_x)``.
    With ``traceless=True`` the constant shift is dropped, leaving
    ``(lambda3/2) sigma_x``; both forms have eigenstates ``|+>`` and ``|->``
    split by ``lambda3``.
    """
    t1 = rotation(p) @ KET1
    h = np.einsum("i,ijkl,k->jl", t1.conj(), build_hmc(p).reshape(2, 2, 2, 2), t1)
    if traceless:
        h = h - 0.5 * np.trace(h) * I2
    return h
