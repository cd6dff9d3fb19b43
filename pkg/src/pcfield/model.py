"""Finite-dimensional periodically correlated field models.

A model is a pair ``(U, P)``: ``U`` is an atomic unitary representation of
Z^n on C^D, ``U^t = sum_j exp(+i chi_j . t) Proj_j``, and ``P`` is a
K-periodic C^D-valued field. The field is ``X(t) = U^t P(t)`` and its
covariance is ``K_X(t, s) = (X(t), X(s)) = X(s)^H X(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionError,
    ModelInvalidError,
    NotPeriodicError,
    NotSquareIntegrableError,
    UndecidableError,
)
from .lattice import (
    EPS_FREQ,
    LatticeSubgroup,
    QuotientStructure,
    angle_distance,
    as_theta,
    wrap_angle,
)

DEFAULT_TRUNCATION = 64
PSD_TOL = 1e-9


def box_window(*ranges: tuple[int, int]) -> np.ndarray:
    """Integer box ``[a1..b1] x [a2..b2] x ...`` as an ``(N, n)`` array."""
    axes = [np.arange(a, b + 1) for a, b in ranges]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1).astype(np.int64)


def _as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=np.int64)
    return p.reshape(1, -1) if p.ndim == 1 else p


# ---------------------------------------------------------------------------
# unitary representation


@dataclass(frozen=True, eq=False)
class UnitaryRep:
    """Atomic unitary representation of Z^n on C^D.

    ``freqs[j]`` is the frequency of the j-th atom and ``bases[j]`` a
    ``(D, m_j)`` matrix with orthonormal columns spanning its eigenspace.
    """

    freqs: np.ndarray
    bases: tuple[np.ndarray, ...]
    tol: float = 1e-10

    def __post_init__(self):
        freqs = wrap_angle(np.atleast_2d(np.asarray(self.freqs, dtype=float)))
        bases = tuple(np.atleast_2d(np.asarray(b, dtype=complex)) for b in self.bases)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "bases", bases)
        if len(freqs) != len(bases):
            raise DimensionError("one basis per atom is required")
        if not bases:
            raise DimensionError("a representation needs at least one atom")
        dim = bases[0].shape[0]
        if any(b.shape[0] != dim for b in bases):
            raise DimensionError("atom bases live in different dimensions")
        for i in range(len(freqs)):
            for j in range(i):
                if angle_distance(freqs[i], freqs[j]) <= EPS_FREQ:
                    raise ModelInvalidError("atom frequencies must be distinct")
        total = sum(b @ b.conj().T for b in bases)
        stacked = np.concatenate(bases, axis=1)
        if stacked.shape[1] != dim or np.max(np.abs(stacked.conj().T @ stacked - np.eye(dim))) > self.tol:
            raise ModelInvalidError("atom bases are not an orthonormal basis of C^D")
        if np.max(np.abs(total - np.eye(dim))) > self.tol:
            raise ModelInvalidError("atom projections do not sum to the identity")

    @property
    def dim(self) -> int:
        return self.bases[0].shape[0]

    @property
    def n(self) -> int:
        return self.freqs.shape[1]

    @property
    def projections(self) -> list[np.ndarray]:
        return [b @ b.conj().T for b in self.bases]

    def operator(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        phases = np.exp(1j * (self.freqs @ t))
        return sum(ph * P for ph, P in zip(phases, self.projections))

    def apply(self, points, vectors) -> np.ndarray:
        """Rows ``U^{t_i} v_i`` for ``points`` (N, n) and ``vectors`` (N, D)."""
        pts = _as_points(points).astype(float)
        v = np.asarray(vectors, dtype=complex).reshape(len(pts), self.dim)
        ph = np.exp(1j * (pts @ self.freqs.T))
        out = np.zeros_like(v)
        for j, B in enumerate(self.bases):
            out += ph[:, j:j + 1] * ((v @ B.conj()) @ B.T)
        return out

    @classmethod
    def diagonal(cls, freqs) -> "UnitaryRep":
        """One atom per coordinate axis of C^D."""
        freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
        D = len(freqs)
        return cls(freqs, tuple(np.eye(D, dtype=complex)[:, [j]] for j in range(D)))

    @classmethod
    def trivial(cls, n: int, dim: int = 1) -> "UnitaryRep":
        return cls(np.zeros((1, n)), (np.eye(dim, dtype=complex),))


# ---------------------------------------------------------------------------
# periodic part


class Envelope(NamedTuple):
    """Declared bound ``||P_K(r, f)|| <= scale * rate ** |f|_1``."""

    scale: float
    rate: float

    def total_sq(self, torsion_order: int, free_rank: int) -> float:
        if self.rate >= 1:
            return math.inf
        g = (1 + self.rate**2) / (1 - self.rate**2)
        return self.scale**2 * torsion_order * g**free_rank

    def tail_sq(self, torsion_order: int, free_rank: int, radius: int) -> float:
        """Bound on the sum of ``||P_K||^2`` outside the free box of given radius."""
        if self.rate >= 1:
            return math.inf
        r2 = self.rate**2
        g = (1 + r2) / (1 - r2)
        gap = 2 * r2 ** (radius + 1) / (1 - r2)
        g_in = g - gap
        # g^f - g_in^f without cancellation
        s = sum(g**k * g_in ** (free_rank - 1 - k) for k in range(free_rank))
        return self.scale**2 * torsion_order * gap * s


class SupportSet(NamedTuple):
    coords: np.ndarray
    values: np.ndarray
    tail_sq: float
    total_sq: float


@dataclass(frozen=True, eq=False)
class PeriodicField:
    """K-periodic field given by its values ``P_K(x)`` on quotient coordinates.

    ``values`` is either a mapping from coordinate tuples to vectors
    (missing coordinates are zero) or a callable on coordinate tuples. A
    callable on an infinite quotient needs an :class:`Envelope` before any
    quotient sum can be evaluated.
    """

    quotient: QuotientStructure
    dim: int
    values: Mapping[tuple[int, ...], np.ndarray] | Callable[[tuple[int, ...]], Sequence[complex]]
    envelope: Envelope | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not callable(self.values):
            clean = {}
            for key, vec in dict(self.values).items():
                x = tuple(int(v) for v in self.quotient.normalize(np.asarray(key, dtype=np.int64)))
                if len(x) != self.quotient.ncoords:
                    raise DimensionError(f"coordinate {key} has wrong length")
                v = np.asarray(vec, dtype=complex).reshape(-1)
                if v.shape[0] != self.dim:
                    raise DimensionError(f"value at {key} has dimension {v.shape[0]}, expected {self.dim}")
                clean[x] = v
            object.__setattr__(self, "values", clean)

    @property
    def subgroup(self) -> LatticeSubgroup:
        return self.quotient.subgroup

    @property
    def finite_support(self) -> bool:
        return not callable(self.values)

    def at(self, coords) -> np.ndarray:
        """``P_K`` at one coordinate tuple or at each row of an ``(N, c)`` array."""
        x = np.asarray(coords, dtype=np.int64)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        out = np.zeros((len(x), self.dim), dtype=complex)
        zero = np.zeros(self.dim, dtype=complex)
        for i, row in enumerate(x.tolist()):
            key = tuple(row)
            if self.finite_support:
                out[i] = self.values.get(key, zero)
            else:
                v = self._cache.get(key)
                if v is None:
                    v = np.asarray(self.values(key), dtype=complex).reshape(self.dim)
                    self._cache[key] = v
                out[i] = v
        return out[0] if single else out

    def __call__(self, points) -> np.ndarray:
        return self.at(self.quotient.to_quotient(points))

    def support(self, truncation: int | None = None) -> SupportSet:
        """Coordinates carrying the field, with bounds on the omitted mass.

        ``tail_sq`` bounds the sum of ``||P_K(x)||^2`` over omitted coordinates
        and ``total_sq`` bounds the full sum (counting measure).
        """
        q = self.quotient
        if self.finite_support:
            keys = sorted(k for k, v in self.values.items() if np.any(v))
            if q.is_finite:
                keys = [tuple(r) for r in q.enumerate().tolist()]
            coords = np.array(keys, dtype=np.int64).reshape(len(keys), q.ncoords)
            vals = self.at(coords) if len(keys) else np.zeros((0, self.dim), complex)
            total = float(np.sum(np.abs(vals) ** 2))
            return SupportSet(coords, vals, 0.0, total)
        if q.is_finite:
            coords = q.enumerate()
            vals = self.at(coords)
            return SupportSet(coords, vals, 0.0, float(np.sum(np.abs(vals) ** 2)))
        if self.envelope is None:
            raise UndecidableError("infinite quotient with a callable field needs a decay envelope")
        if self.envelope.rate >= 1:
            raise NotSquareIntegrableError(
                f"envelope rate {self.envelope.rate} does not certify square integrability")
        L = DEFAULT_TRUNCATION if truncation is None else int(truncation)
        coords = q.box(L)
        vals = self.at(coords)
        tail = self.envelope.tail_sq(q.torsion_order, q.free_rank, L)
        total = self.envelope.total_sq(q.torsion_order, q.free_rank)
        return SupportSet(coords, vals, tail, total)

    def transformed(self, values=None, envelope=None) -> "PeriodicField":
        return PeriodicField(self.quotient, self.dim, self.values if values is None else values,
                             self.envelope if envelope is None else envelope)

    @classmethod
    def constant(cls, quotient: QuotientStructure, vector) -> "PeriodicField":
        v = np.asarray(vector, dtype=complex).reshape(-1)
        if quotient.is_finite:
            return cls(quotient, len(v), {tuple(x): v for x in quotient.enumerate().tolist()})
        return cls(quotient, len(v), lambda x: v)


# ---------------------------------------------------------------------------
# the model


@dataclass(frozen=True, eq=False)
class PCFieldModel:
    """``X(t) = U^t P(t)`` with ``P`` periodic with respect to ``P.subgroup``."""

    U: UnitaryRep
    P: PeriodicField

    @property
    def subgroup(self) -> LatticeSubgroup:
        return self.P.subgroup

    @property
    def quotient(self) -> QuotientStructure:
        return self.P.quotient

    @property
    def n(self) -> int:
        return self.U.n

    @property
    def dim(self) -> int:
        return self.U.dim

    def X(self, points) -> np.ndarray:
        """Field values as rows, ``(N, D)``; a single point gives a vector."""
        p = np.asarray(points, dtype=np.int64)
        single = p.ndim == 1
        p = _as_points(p)
        out = self.U.apply(p, self.P(p))
        return out[0] if single else out

    def kernel(self, t, s) -> complex:
        return complex(np.vdot(self.X(s), self.X(t)))

    def kernel_matrix(self, points_a, points_b=None) -> np.ndarray:
        """``M[i, j] = K_X(a_i, b_j)``."""
        xa = self.X(_as_points(points_a))
        xb = xa if points_b is None else self.X(_as_points(points_b))
        return xa @ xb.conj().T

    def b(self, t, s, x) -> complex:
        """``b_X(t, s; x) = K_X(t + xi(x), s + xi(x))``."""
        u = self.quotient.section(np.asarray(x, dtype=np.int64))
        return self.kernel(np.asarray(t) + u, np.asarray(s) + u)

    def B(self, t, x) -> complex:
        """``B_X(t; x) = b_X(t, 0; x)``."""
        return self.b(t, np.zeros(self.n, dtype=np.int64), x)

    def B_many(self, t, coords) -> np.ndarray:
        """``B_X(t; x)`` for every row of ``coords``."""
        u = self.quotient.section(np.atleast_2d(coords))
        xt = self.X(u + np.asarray(t, dtype=np.int64))
        x0 = self.X(u)
        return np.einsum("ij,ij->i", xt, x0.conj())

    def scale(self, window=None) -> float:
        """Largest variance ``K_X(t, t)`` on the support (or on ``window``)."""
        if window is not None:
            x = self.X(_as_points(window))
        else:
            x = self.P.support().values
        v = float(np.max(np.sum(np.abs(x) ** 2, axis=1))) if len(x) else 0.0
        return v if v > 0 else 1.0


def make_model(U: UnitaryRep, P: PeriodicField) -> PCFieldModel:
    if U.dim != P.dim:
        raise DimensionError(f"representation acts on C^{U.dim} but P takes values in C^{P.dim}")
    if U.n != P.quotient.n:
        raise DimensionError("representation and subgroup live in different lattices")
    return PCFieldModel(U, P)


def stationary_model(freqs, weights, n: int | None = None) -> PCFieldModel:
    """Stationary field with atomic spectral measure ``sum_j weights[j] delta_{freqs[j]}``.

    Realized with one axis of C^D per atom and ``p_j = sqrt(weights[j])``, so
    ``R(t) = sum_j weights[j] exp(i freqs[j] . t)``.
    """
    freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
    if n is not None and freqs.shape[1] != n:
        freqs = freqs.reshape(-1, n)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ModelInvalidError("spectral weights must be non-negative")
    U = UnitaryRep.diagonal(freqs)
    q = LatticeSubgroup.full(U.n).quotient
    return make_model(U, PeriodicField.constant(q, np.sqrt(w)))


def _stationary_vector(Y: PCFieldModel) -> np.ndarray:
    q = Y.quotient
    if not q.is_finite:
        raise ModelInvalidError("the base field must be stationary")
    vals = Y.P.at(q.enumerate())
    if np.max(np.abs(vals - vals[0])) > 1e-12:
        raise ModelInvalidError("the base field must be stationary (constant P)")
    return vals[0]


def _check_periodic(f, K: LatticeSubgroup, window, tol=1e-12):
    for t in _as_points(window):
        ft = np.asarray(f(tuple(int(v) for v in t)))
        for k in K.matrix:
            fk = np.asarray(f(tuple(int(v) for v in t + k)))
            if np.max(np.abs(fk - ft)) > tol:
                raise NotPeriodicError(f"function is not K-periodic at t={t.tolist()}, k={k.tolist()}")


def _default_check_window(n: int) -> np.ndarray:
    return box_window(*[(-4, 4)] * n)


def amplitude_modulated(f, Y: PCFieldModel, K: LatticeSubgroup, window=None,
                        envelope: Envelope | None = None) -> PCFieldModel:
    """``X(t) = f(t) Y(t)`` for a scalar K-periodic ``f`` and stationary ``Y``.

    ``f`` takes a point tuple; periodicity is checked on ``window``.
    """
    p = _stationary_vector(Y)
    _check_periodic(f, K, _default_check_window(K.n) if window is None else window)
    q = K.quotient

    def values(x):
        return complex(f(tuple(int(v) for v in q.section(np.array(x))))) * p

    if q.is_finite:
        P = PeriodicField(q, len(p), {tuple(x): values(x) for x in q.enumerate().tolist()})
    else:
        P = PeriodicField(q, len(p), values, envelope)
    return make_model(Y.U, P)


def time_deformed(f, Y: PCFieldModel, K: LatticeSubgroup, window=None,
                  envelope: Envelope | None = None) -> PCFieldModel:
    """``X(t) = Y(t + f(t))`` for an integer-vector K-periodic ``f``.

    Realized as ``P(t) = U_Y^{f(t)} p``.
    """
    p = _stationary_vector(Y)
    win = _default_check_window(K.n) if window is None else window
    for t in _as_points(win):
        v = np.asarray(f(tuple(int(c) for c in t)))
        if v.dtype.kind not in "iu" and not np.all(np.asarray(v, dtype=float) == np.round(v)):
            raise ModelInvalidError("time deformation must be integer valued")
    _check_periodic(f, K, win, tol=0)
    q = K.quotient

    def values(x):
        shift = np.asarray(f(tuple(int(v) for v in q.section(np.array(x)))), dtype=float)
        return Y.U.operator(shift) @ p

    if q.is_finite:
        P = PeriodicField(q, len(p), {tuple(x): values(x) for x in q.enumerate().tolist()})
    else:
        P = PeriodicField(q, len(p), values, envelope)
    return make_model(Y.U, P)


def is_k_pc(model: PCFieldModel, K: LatticeSubgroup, window, tol: float = 1e-10) -> bool:
    """Check ``K_X(t + k, s + k) == K_X(t, s)`` for all generators and window pairs."""
    return k_pc_violation(model, K, window) <= tol * model.scale(window)


def k_pc_violation(model: PCFieldModel, K: LatticeSubgroup, window) -> float:
    w = _as_points(window)
    base = model.kernel_matrix(w)
    worst = 0.0
    for k in K.matrix:
        worst = max(worst, float(np.max(np.abs(model.kernel_matrix(w + k) - base))))
    return worst


class SquareIntegrability(NamedTuple):
    finite: bool
    value: float
    tail_bound: float


def is_square_integrable(model: PCFieldModel, truncation: int | None = None) -> SquareIntegrability:
    """Sum of ``B_X(0; x) = ||P_K(x)||^2`` over the quotient, counting measure.

    Finite quotients and finitely supported fields give an exact value; a
    decay envelope gives a truncated value and a tail bound. A callable
    field on an infinite quotient without an envelope is undecidable.
    """
    try:
        sup = model.P.support(truncation)
    except NotSquareIntegrableError:
        return SquareIntegrability(False, math.inf, math.inf)
    value = float(np.sum(np.abs(sup.values) ** 2))
    return SquareIntegrability(True, value, sup.tail_sq)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class Realizations:
    points: np.ndarray
    paths: np.ndarray
    seed: int


def psd_factor(gram: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """``L`` with ``L @ L^H == gram`` from a floored Hermitian eigendecomposition."""
    g = np.asarray(gram, dtype=complex)
    if np.max(np.abs(g - g.conj().T), initial=0.0) > tol * max(1.0, np.max(np.abs(g), initial=0.0)):
        raise ModelInvalidError("kernel matrix is not Hermitian")
    g = (g + g.conj().T) / 2
    w, v = np.linalg.eigh(g)
    scale = max(float(np.max(np.abs(np.diag(g)).real, initial=0.0)), 1e-300)
    if len(w) and w[0] < -tol * scale:
        raise ModelInvalidError(f"kernel matrix is not PSD (min eigenvalue {w[0]:.3e})")
    return v * np.sqrt(np.clip(w, 0.0, None))


def sample_paths(model: PCFieldModel, window, count: int, seed: int) -> Realizations:
    """Zero-mean circular complex Gaussian draws with covariance ``K_X`` on ``window``."""
    pts = _as_points(window)
    L = psd_factor(model.kernel_matrix(pts))
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((count, L.shape[1])) + 1j * rng.standard_normal((count, L.shape[1]))) / np.sqrt(2)
    return Realizations(pts, z @ L.T, seed)


def empirical_covariance(real: Realizations) -> np.ndarray:
    x = real.paths
    return (x.T @ x.conj()) / len(x)
