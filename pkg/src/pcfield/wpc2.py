"""Weakly PC fields on Z^2 with a single period vector ``(T, S)``.

With ``d = gcd(T, S)``, ``(T, S) = d (T1, S1)`` and a Bezout pair
``T1 q - S1 p = 1``, the matrix ``Phi = [[T1, p], [S1, q]]`` is unimodular
and ``phi(j, l) = j (T1, S1) + l (p, q)`` identifies ``Z_d x Z`` with
``Z^2 / K``. The annihilator of ``K`` is the union of ``d`` lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NotSquareIntegrableError, UndecidableError
from .lattice import TWO_PI, BezoutData, LatticeSubgroup, bezout_phi, wrap_angle
from .model import DEFAULT_TRUNCATION, Envelope, PCFieldModel, PeriodicField, UnitaryRep, make_model


@dataclass(frozen=True)
class WpcParams:
    T: int
    S: int
    bezout: BezoutData

    @classmethod
    def of(cls, T: int, S: int) -> "WpcParams":
        return cls(int(T), int(S), bezout_phi(T, S))

    @property
    def d(self) -> int:
        return self.bezout.d

    @property
    def phi(self) -> np.ndarray:
        return np.asarray(self.bezout.phi, dtype=np.int64)

    @property
    def subgroup(self) -> LatticeSubgroup:
        return LatticeSubgroup.from_generators([[self.T, self.S]])

    def phi_map(self, j, l) -> np.ndarray:
        """``phi(j, l) = (j, l) Phi^T``."""
        return np.stack([np.asarray(j), np.asarray(l)], axis=-1) @ self.phi.T

    def psi(self, s, t) -> np.ndarray:
        """``[(s, t) Phi^{-1}]_{2pi}``: dual coordinates to a point of the torus."""
        inv = np.round(np.linalg.inv(self.phi)).astype(np.int64)
        return wrap_angle(np.stack([np.asarray(s, float), np.asarray(t, float)], axis=-1) @ inv)

    def line_point(self, k: int, t) -> np.ndarray:
        b = self.bezout
        t = np.asarray(t, dtype=float)
        u = TWO_PI * k * b.q / b.d - b.S1 * t
        v = -TWO_PI * k * b.p / b.d + b.T1 * t
        return wrap_angle(np.stack([u, v], axis=-1))


def lambda_lines(params: WpcParams):
    """The ``d`` lines ``Lambda_k(t)`` as callables of the line parameter."""
    return [(lambda t, k=k: params.line_point(k, t)) for k in range(params.d)]


def a_kt(model: PCFieldModel, params: WpcParams, k: int, t_angle: float, m: int, n: int,
         truncation: int = DEFAULT_TRUNCATION) -> tuple[complex, float]:
    """Spectral covariance at ``lambda = Lambda_k(t_angle)`` and lag ``(m, n)``.

    ``(1/d) sum_{j<d} sum_{|l|<=L} exp(-i(2pi k j/d + l t)) K_X((m, n) + phi(j, l), phi(j, l))``
    with a Cauchy-Schwarz tail bound from the model envelope.
    """
    if not model.subgroup.same_as(params.subgroup):
        raise ContractError("model is not periodic with respect to the period vector")
    d, L = params.d, int(truncation)
    j, l = np.meshgrid(np.arange(d), np.arange(-L, L + 1), indexing="ij")
    j, l = j.ravel(), l.ravel()
    base = params.phi_map(j, l)
    lag = np.array([m, n], dtype=np.int64)
    xt = model.X(base + lag)
    x0 = model.X(base)
    K = np.einsum("ij,ij->i", xt, x0.conj())
    w = np.exp(-1j * (TWO_PI * k * j / d + l * t_angle))
    value = complex(np.sum(w * K)) / d
    return value, _tail_bound(model, params, lag, L)


def _tail_bound(model: PCFieldModel, params: WpcParams, lag: np.ndarray, L: int) -> float:
    P = model.P
    if P.finite_support:
        sup = P.support()
        free = model.quotient.free_part(sup.coords)
        shift = int(model.quotient.free_part(model.quotient.to_quotient(lag))[0])
        lim = int(np.max(np.abs(free), initial=0))
        return 0.0 if L >= lim + abs(shift) else _cs_tail(sup.total_sq, sup.total_sq, params.d)
    env = P.envelope
    if env is None:
        raise UndecidableError("tail bound needs a decay envelope")
    if env.rate >= 1:
        raise NotSquareIntegrableError("field envelope does not decay")
    q = model.quotient
    shift = abs(int(q.free_part(q.to_quotient(lag))[0]))
    t0 = env.tail_sq(q.torsion_order, 1, L)
    L1 = L - shift
    t1 = env.tail_sq(q.torsion_order, 1, L1) if L1 >= 0 else env.total_sq(q.torsion_order, 1)
    return _cs_tail(t0, t1, params.d)


def _cs_tail(a: float, b: float, d: int) -> float:
    return math.sqrt(a * b) / d


def transform_model(model: PCFieldModel, M) -> PCFieldModel:
    """The field ``Y(t) = X(t M)`` for a unimodular integer matrix ``M``.

    ``Y`` is periodic with respect to ``K M^{-1}``; its frequencies are
    ``chi M^T``. A declared envelope is carried over when the free rank is at
    most one, where quotient automorphisms preserve ``|l|``.
    """
    M = np.asarray(M, dtype=np.int64)
    det = round(np.linalg.det(M))
    if abs(det) != 1:
        raise ContractError("transform matrix must be unimodular")
    Minv = np.round(np.linalg.inv(M)).astype(np.int64)
    U = UnitaryRep(wrap_angle(model.U.freqs @ M.T), model.U.bases)
    K = model.subgroup
    K2 = LatticeSubgroup.from_generators(K.matrix @ Minv, n=K.n)
    q, q2 = model.quotient, K2.quotient

    def values(x):
        return model.P.at(q.to_quotient(q2.section(np.asarray(x, dtype=np.int64)) @ M))

    if q2.is_finite:
        P = PeriodicField(q2, model.dim, {tuple(x): values(x) for x in q2.enumerate().tolist()})
    elif model.P.finite_support:
        keys = q2.to_quotient(q.section(model.P.support().coords) @ Minv)
        P = PeriodicField(q2, model.dim, {tuple(x): values(x) for x in keys.tolist()})
    else:
        env = model.P.envelope if q.free_rank <= 1 else None
        P = PeriodicField(q2, model.dim, values, env)
    return make_model(U, P)


def rotate_to_stationary(model: PCFieldModel, params: WpcParams) -> PCFieldModel:
    """``Y(m, n) = X((m, n) Phi^T)``, stationary in ``m`` when ``d = 1``."""
    if params.d != 1:
        raise ContractError(f"rotation to a stationary field needs d = 1, got d = {params.d}")
    if not model.subgroup.same_as(params.subgroup):
        raise ContractError("model is not periodic with respect to the period vector")
    return transform_model(model, params.phi.T)


def figure_data(params: WpcParams, samples: int = 360):
    """Points of the ``d`` lines: rows ``(k, t, u, v)`` and per-line plot segments.

    Segments split each line wherever it wraps around the torus.
    """
    if samples < 2:
        raise ContractError("at least two samples are needed")
    t = np.linspace(0.0, TWO_PI, samples)
    rows, segments = [], []
    for k in range(params.d):
        uv = params.line_point(k, t)
        rows.extend((k, float(tt), float(u), float(v)) for tt, (u, v) in zip(t, uv))
        jump = np.nonzero(np.any(np.abs(np.diff(uv, axis=0)) > np.pi, axis=1))[0] + 1
        for seg in np.split(np.arange(samples), jump):
            segments.append({"k": k, "points": uv[seg].tolist()})
    return rows, segments


def example_model(T: int = 12, S: int = 9, rate: float = 0.5) -> PCFieldModel:
    """Two-atom weakly PC field on Z^2 with period ``(T, S)``."""
    K = LatticeSubgroup.from_generators([[T, S]])
    q = K.quotient
    tors = q.torsion[0] if q.torsion else 1

    def values(x):
        r = int(x[0]) if q.torsion else 0
        l = int(x[-1])
        base = np.array([1.0 + 0.5 * np.cos(TWO_PI * r / tors), 0.7j * np.exp(1j * TWO_PI * r / tors)])
        return base * np.exp(0.3j * l) * rate ** abs(l)

    U = UnitaryRep.diagonal([[0.3, 1.1], [2.0, 0.4]])
    return make_model(U, PeriodicField(q, 2, values, Envelope(1.66, rate)))
