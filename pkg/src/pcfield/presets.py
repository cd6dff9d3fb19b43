"""Small reference models used by the test-suite and the CLI.

    stationary  Z^2, three atoms, K = Z^2
    strong      Z^2, K = 2Z x 3Z, C^4 with a two-dimensional eigenspace and
                two atoms whose frequencies differ by an annihilator element
    weak        Z^2, K generated by (12, 9), geometric envelope with rate 1/2
    ampl2       Z, K = 2Z, amplitude (1, 2) on a stationary base with R(0) = 1
"""

from __future__ import annotations

import numpy as np

from .lattice import LatticeSubgroup
from .model import (
    Envelope,
    PCFieldModel,
    PeriodicField,
    UnitaryRep,
    amplitude_modulated,
    make_model,
    stationary_model,
)

WEAK_RATE = 0.5


def stationary() -> PCFieldModel:
    return stationary_model([[0.3, 1.1], [2.0, 0.4], [4.5, 5.2]], [1.0, 0.5, 0.8])


def strong() -> PCFieldModel:
    rng = np.random.default_rng(20240601)
    K = LatticeSubgroup.from_generators([[2, 0], [0, 3]])
    q = K.quotient
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    chi = np.array([[0.7, 0.2], [1.9, 2.6], [1.9 + np.pi, 2.6]])
    U = UnitaryRep(chi, (Q[:, :2], Q[:, 2:3], Q[:, 3:4]))
    values = {tuple(x): rng.standard_normal(4) + 1j * rng.standard_normal(4)
              for x in q.enumerate().tolist()}
    return make_model(U, PeriodicField(q, 4, values))


def _weak_values(x):
    r, l = int(x[0]), int(x[1])
    base = np.array([1.0 + 0.5 * np.cos(2 * np.pi * r / 3), 0.7j * np.exp(2j * np.pi * r / 3)])
    return base * np.exp(0.3j * l) * WEAK_RATE ** abs(l)


def weak() -> PCFieldModel:
    K = LatticeSubgroup.from_generators([[12, 9]])
    U = UnitaryRep.diagonal([[0.3, 1.1], [2.0, 0.4]])
    # |base| <= sqrt(1.5^2 + 0.7^2) < 1.66
    return make_model(U, PeriodicField(K.quotient, 2, _weak_values, Envelope(1.66, WEAK_RATE)))


def ampl2() -> PCFieldModel:
    Y = stationary_model([[0.4], [2.1]], [0.6, 0.4])
    K = LatticeSubgroup.from_generators([[2]])
    return amplitude_modulated(lambda t: (1.0, 2.0)[t[0] % 2], Y, K)


PRESETS = {"stationary": stationary, "strong": strong, "weak": weak, "ampl2": ampl2}


def preset(name: str) -> PCFieldModel:
    try:
        return PRESETS[name]()
    except KeyError:
        from .errors import ContractError
        raise ContractError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def weak_window() -> np.ndarray:
    """Image of the 9 x 9 box under ``(i, j) -> i (4, 3) + j (1, 1)``."""
    ij = np.array([(i, j) for i in range(9) for j in range(9)], dtype=np.int64)
    return ij @ np.array([[4, 3], [1, 1]], dtype=np.int64)
