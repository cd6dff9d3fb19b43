"""Integer-lattice algebra for subgroups K of Z^n.

Everything here is exact: normal forms are computed with Python integers
and only converted to ``int64`` arrays after an explicit range check.

Conventions used across the package:

* points of Z^n and frequencies of the torus [0, 2pi)^n are row vectors;
* the character of a frequency ``theta`` at ``t`` is ``exp(-1j * theta . t)``;
* quotient coordinates of Z^n / K are ``(r_1, ..., r_k, f_1, ..., f_m)``
  where ``r_i`` is a residue modulo the i-th invariant factor ``d_i >= 2``
  and ``f_j`` are free integers.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ContractError, DomainError, InvalidSubgroupError

TWO_PI = 2.0 * np.pi
EPS_FREQ = 1e-9
INT64_MAX = 2**63 - 1


# ---------------------------------------------------------------------------
# integer helpers


def _int_rows(a) -> list[list[int]]:
    arr = np.asarray(a, dtype=object)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    if arr.ndim != 2:
        raise ContractError(f"expected an integer matrix, got shape {arr.shape}")
    rows = []
    for row in arr.tolist():
        out = []
        for v in row:
            if isinstance(v, (bool, np.bool_)):
                raise ContractError("boolean entries are not integers")
            if isinstance(v, (float, np.floating)):
                if not float(v).is_integer():
                    raise ContractError(f"non-integer entry {v!r}")
                v = int(v)
            out.append(int(v))
        rows.append(out)
    return rows


def _checked(rows: Sequence[Sequence[int]], ncols: int) -> np.ndarray:
    for row in rows:
        for v in row:
            if abs(v) > INT64_MAX:
                raise OverflowError(f"integer {v} does not fit in 64 bits")
    return np.array(rows, dtype=np.int64).reshape(len(rows), ncols)


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``a*x + b*y == g == gcd(a, b) > 0``.

    The pair is the extended-Euclid one, shifted so that ``-|a/g| < y <= 0``
    when ``a != 0`` (and ``x == 0`` when ``a == 0``).
    """
    a, b = int(a), int(b)
    if a == 0 and b == 0:
        raise InvalidSubgroupError("gcd(0, 0) is undefined")
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    g, x, y = old_r, old_x, old_y
    if g < 0:
        g, x, y = -g, -x, -y
    a1, b1 = a // g, b // g
    if a1 != 0:
        # general solution (x + m*b1, y - m*a1); pick m so that y lands in (-|a1|, 0]
        m = -((-y) // abs(a1)) * (1 if a1 > 0 else -1)
        x, y = x + m * b1, y - m * a1
    else:
        x = 0
        y = g // b
    assert a * x + b * y == g
    return g, x, y


class BezoutData(NamedTuple):
    d: int
    T1: int
    S1: int
    p: int
    q: int
    phi: np.ndarray


def bezout_phi(T: int, S: int) -> BezoutData:
    """Unimodular basis change for the one-generator subgroup {k(T, S)}.

    Returns ``d = gcd(T, S)``, the reduced pair ``(T1, S1)``, integers
    ``p, q`` with ``T1*q - S1*p == 1`` and ``Phi = [[T1, p], [S1, q]]``.
    ``p`` is normalized to ``0 <= p < |T1|``.

    >>> bezout_phi(12, 9)[:5]
    (3, 4, 3, 1, 1)
    """
    T, S = int(T), int(S)
    if T == 0 and S == 0:
        raise InvalidSubgroupError("(T, S) = (0, 0) does not generate a subgroup")
    if T <= 0 and S <= 0:
        raise InvalidSubgroupError("at least one of T, S must be positive")
    d, x, y = ext_gcd(T, S)
    T1, S1 = T // d, S // d
    q, p = x, -y
    phi = np.array([[T1, p], [S1, q]], dtype=np.int64)
    assert T1 * q - S1 * p == 1
    return BezoutData(d, T1, S1, p, q, phi)


def smith_normal_form(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smith decomposition ``U @ A @ V == S`` of an integer matrix.

    ``U`` and ``V`` are unimodular, ``S`` is diagonal with non-negative
    entries ``d_1 | d_2 | ...``. Arithmetic is exact; an entry that does not
    fit in 64 bits raises :class:`OverflowError`.
    """
    m = _int_rows(a)
    r = len(m)
    n = len(m[0]) if r else (np.asarray(a).shape[-1] if np.asarray(a).ndim == 2 else 0)
    U = [[int(i == j) for j in range(r)] for i in range(r)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def col_op(s, j, x, y, u, v):
        # col_s <- x col_s + y col_j ; col_j <- u col_s + v col_j
        for M in (m, V):
            for row in M:
                cs, cj = row[s], row[j]
                row[s], row[j] = x * cs + y * cj, u * cs + v * cj

    def row_op(s, i, x, y, u, v):
        for M in (m, U):
            rs, ri = M[s], M[i]
            M[s] = [x * p + y * q for p, q in zip(rs, ri)]
            M[i] = [u * p + v * q for p, q in zip(rs, ri)]

    for s in range(min(r, n)):
        # pivot: first nonzero entry of the trailing block, scanning rows
        if m[s][s] == 0:
            hit = next(((i, j) for i in range(s, r) for j in range(s, n) if m[i][j]), None)
            if hit is None:
                break
            i, j = hit
            if i != s:
                m[s], m[i] = m[i], m[s]
                U[s], U[i] = U[i], U[s]
            if j != s:
                for M in (m, V):
                    for row in M:
                        row[s], row[j] = row[j], row[s]
        while True:
            done = True
            for j in range(s + 1, n):
                b = m[s][j]
                if b:
                    a_ = m[s][s]
                    g, x, y = ext_gcd(a_, b)
                    col_op(s, j, x, y, -b // g, a_ // g)
            for i in range(s + 1, r):
                b = m[i][s]
                if b:
                    done = False
                    a_ = m[s][s]
                    g, x, y = ext_gcd(a_, b)
                    row_op(s, i, x, y, -b // g, a_ // g)
            if any(m[s][j] for j in range(s + 1, n)):
                continue
            if not done and any(m[i][s] for i in range(s + 1, r)):
                continue
            piv = m[s][s]
            bad = next(
                (i for i in range(s + 1, r) for j in range(s + 1, n) if piv and m[i][j] % piv),
                None,
            )
            if bad is not None:
                m[s] = [p + q for p, q in zip(m[s], m[bad])]
                U[s] = [p + q for p, q in zip(U[s], U[bad])]
                continue
            break
        if m[s][s] < 0:
            m[s] = [-v for v in m[s]]
            U[s] = [-v for v in U[s]]
    return _checked(U, r), _checked(m, n), _checked(V, n)


def hermite_normal_form(a) -> np.ndarray:
    """Row-style Hermite normal form with the zero rows removed.

    Rows are in echelon form with positive pivots; entries above a pivot are
    reduced into ``[0, pivot)``.
    """
    m = _int_rows(a)
    r = len(m)
    n = len(m[0]) if r else 0
    i = 0
    for c in range(n):
        if i >= r:
            break
        rows = [k for k in range(i, r) if m[k][c]]
        if not rows:
            continue
        if rows[0] != i:
            m[i], m[rows[0]] = m[rows[0]], m[i]
        for k in range(i + 1, r):
            b = m[k][c]
            if b:
                a_ = m[i][c]
                g, x, y = ext_gcd(a_, b)
                ri, rk = m[i], m[k]
                m[i] = [x * p + y * q for p, q in zip(ri, rk)]
                m[k] = [(-b // g) * p + (a_ // g) * q for p, q in zip(ri, rk)]
        if m[i][c] < 0:
            m[i] = [-v for v in m[i]]
        piv = m[i][c]
        for k in range(i):
            f = m[k][c] // piv
            if f:
                m[k] = [p - f * q for p, q in zip(m[k], m[i])]
        i += 1
    return _checked([row for row in m[:i]], n)


def _exact_inverse(V: np.ndarray) -> np.ndarray:
    n = V.shape[0]
    aug = [[Fraction(int(V[i, j])) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)]
           for i in range(n)]
    for c in range(n):
        p = next(k for k in range(c, n) if aug[k][c] != 0)
        aug[c], aug[p] = aug[p], aug[c]
        pv = aug[c][c]
        aug[c] = [v / pv for v in aug[c]]
        for k in range(n):
            if k != c and aug[k][c] != 0:
                f = aug[k][c]
                aug[k] = [v - f * w for v, w in zip(aug[k], aug[c])]
    inv = [[row[n + j] for j in range(n)] for row in aug]
    if any(v.denominator != 1 for row in inv for v in row):
        raise ArithmeticError("matrix is not unimodular")
    return _checked([[int(v) for v in row] for row in inv], n)


def _lattice_points_in_box(H: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> list[np.ndarray]:
    """All points of the row lattice of echelon basis ``H`` inside ``[lo, hi]``."""
    n = len(lo)
    pivots = [int(np.flatnonzero(row)[0]) for row in H]
    out = []

    def rec(i, partial):
        if i == len(H):
            if np.all(partial >= lo) and np.all(partial <= hi):
                out.append(partial.copy())
            return
        c, h = pivots[i], int(H[i, pivots[i]])
        # earlier rows fix coordinates before c; later rows leave c untouched
        if np.any(partial[:c] < lo[:c]) or np.any(partial[:c] > hi[:c]):
            return
        cmin = -((partial[c] - lo[c]) // h)
        cmax = (hi[c] - partial[c]) // h
        for coef in range(int(cmin), int(cmax) + 1):
            rec(i + 1, partial + coef * H[i])

    rec(0, np.zeros(n, dtype=np.int64))
    return out


# ---------------------------------------------------------------------------
# frequencies


def wrap_angle(theta):
    """Reduce angles into ``[0, 2pi)``; values within EPS_FREQ of 2pi become 0."""
    th = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    return np.where(th > TWO_PI - EPS_FREQ, 0.0, th)


def angle_distance(a, b):
    """Largest coordinatewise distance on the circle."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float) + np.pi, TWO_PI) - np.pi
    return float(np.max(np.abs(d))) if np.size(d) else 0.0


@dataclass(frozen=True)
class Frequency:
    """A point of the torus [0, 2pi)^n.

    ``torsion_index`` and ``free_angles`` are the dual coordinates with
    respect to some quotient, when known.
    """

    theta: tuple[float, ...]
    torsion_index: tuple[int, ...] | None = None
    free_angles: tuple[float, ...] | None = None

    @classmethod
    def of(cls, theta, torsion_index=None, free_angles=None) -> "Frequency":
        th = tuple(float(v) for v in wrap_angle(np.atleast_1d(theta)))
        return cls(th,
                   None if torsion_index is None else tuple(int(v) for v in torsion_index),
                   None if free_angles is None else tuple(float(v) for v in free_angles))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.theta, dtype=float)

    def __len__(self):
        return len(self.theta)

    def close_to(self, other, tol: float = EPS_FREQ) -> bool:
        return angle_distance(self.theta, as_theta(other)) <= tol


def as_theta(freq) -> np.ndarray:
    """Angle vector of a :class:`Frequency` or an array-like."""
    if isinstance(freq, Frequency):
        return freq.array
    return np.atleast_1d(np.asarray(freq, dtype=float))


def character(freq, t) -> complex | np.ndarray:
    """``exp(-i theta . t)``; ``t`` may be a single point or an ``(N, n)`` array."""
    theta = as_theta(freq)
    t = np.asarray(t)
    return np.exp(-1j * (t @ theta))


# ---------------------------------------------------------------------------
# subgroups and quotients


@dataclass(frozen=True, eq=False)
class LatticeSubgroup:
    """Subgroup of Z^n generated by the rows of ``generators``."""

    n: int
    generators: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSubgroupError("ambient dimension must be positive")
        for row in self.generators:
            if len(row) != self.n:
                raise InvalidSubgroupError(f"generator {row} has wrong length for n={self.n}")
            if not any(row):
                raise InvalidSubgroupError("zero generator rows are not allowed")

    @classmethod
    def from_generators(cls, generators, n: int | None = None) -> "LatticeSubgroup":
        arr = np.asarray(generators, dtype=object)
        if arr.size == 0:
            if n is None:
                raise InvalidSubgroupError("empty generator list needs an explicit n")
            return cls(n, ())
        rows = _int_rows(generators)
        return cls(len(rows[0]) if n is None else n, tuple(tuple(r) for r in rows))

    @classmethod
    def full(cls, n: int) -> "LatticeSubgroup":
        return cls(n, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.generators, dtype=np.int64).reshape(len(self.generators), self.n)

    @cached_property
    def hnf(self) -> np.ndarray:
        if not self.generators:
            return np.zeros((0, self.n), dtype=np.int64)
        return hermite_normal_form(self.matrix)

    @property
    def rank(self) -> int:
        return len(self.hnf)

    def reduce(self, points) -> np.ndarray:
        """Canonical representative of ``t + K``: pivot coordinates in ``[0, h)``."""
        t = np.array(points, dtype=np.int64)
        single = t.ndim == 1
        t = np.atleast_2d(t).copy()
        for row in self.hnf:
            c = int(np.flatnonzero(row)[0])
            q = np.floor_divide(t[:, c], row[c])
            t -= q[:, None] * row[None, :]
        return t[0] if single else t

    def contains(self, point) -> bool:
        return not np.any(self.reduce(np.asarray(point, dtype=np.int64)))

    def same_as(self, other: "LatticeSubgroup") -> bool:
        return self.n == other.n and np.array_equal(self.hnf, other.hnf)

    @cached_property
    def quotient(self) -> "QuotientStructure":
        return quotient(self)

    def __repr__(self):
        return f"LatticeSubgroup(n={self.n}, generators={[list(g) for g in self.generators]})"


@dataclass(frozen=True, eq=False)
class QuotientStructure:
    """Z^n / K as ``Z_{d_1} x ... x Z_{d_k} x Z^f``.

    Built from the Smith decomposition ``U A V = S`` of the generator matrix:
    with ``y = t V``, the coordinates ``y_i`` with ``d_i >= 2`` are read modulo
    ``d_i`` and the coordinates beyond the rank are free.
    """

    subgroup: LatticeSubgroup
    torsion: tuple[int, ...]
    free_rank: int
    smith: tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False)
    _v: np.ndarray = field(repr=False)
    _v_inv: np.ndarray = field(repr=False)
    _tors_idx: np.ndarray = field(repr=False)
    _free_idx: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.subgroup.n

    @property
    def ncoords(self) -> int:
        return len(self.torsion) + self.free_rank

    @property
    def torsion_order(self) -> int:
        return math.prod(self.torsion)

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    @property
    def size(self) -> int | float:
        return self.torsion_order if self.is_finite else math.inf

    @property
    def change_of_basis(self) -> np.ndarray:
        """The unimodular ``V`` with ``y = t V``."""
        return self._v

    def diagonal_residues(self) -> tuple[int, ...] | None:
        """Per-axis periods when the generator matrix is diagonal, else None."""
        A = self.subgroup.matrix
        if A.shape[0] != A.shape[1] or np.count_nonzero(A - np.diag(np.diag(A))):
            return None
        return tuple(int(abs(v)) for v in np.diag(A))

    def to_quotient(self, points) -> np.ndarray:
        """Quotient coordinates of one point (1-D) or of an ``(N, n)`` array."""
        t = np.asarray(points, dtype=np.int64)
        y = t @ self._v
        tors = np.mod(y[..., self._tors_idx], np.array(self.torsion, dtype=np.int64))
        return np.concatenate([tors, y[..., self._free_idx]], axis=-1)

    def section(self, coords) -> np.ndarray:
        """Canonical coset representative: the HNF-reduced point of the coset."""
        x = np.asarray(coords, dtype=np.int64)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        y = np.zeros((x.shape[0], self.n), dtype=np.int64)
        k = len(self.torsion)
        y[:, self._tors_idx] = x[:, :k]
        y[:, self._free_idx] = x[:, k:]
        t = self.subgroup.reduce(y @ self._v_inv)
        return t[0] if single else t

    def normalize(self, coords) -> np.ndarray:
        x = np.array(coords, dtype=np.int64)
        k = len(self.torsion)
        x[..., :k] = np.mod(x[..., :k], np.array(self.torsion, dtype=np.int64))
        return x

    def add(self, x, y) -> np.ndarray:
        return self.normalize(np.asarray(x, dtype=np.int64) + np.asarray(y, dtype=np.int64))

    def sub(self, x, y) -> np.ndarray:
        return self.normalize(np.asarray(x, dtype=np.int64) - np.asarray(y, dtype=np.int64))

    def free_part(self, coords) -> np.ndarray:
        return np.asarray(coords)[..., len(self.torsion):]

    def torsion_coords(self) -> np.ndarray:
        """All torsion residue vectors, ``(torsion_order, k)``."""
        grid = list(itertools.product(*[range(d) for d in self.torsion]))
        return np.array(grid, dtype=np.int64).reshape(len(grid), len(self.torsion))

    def enumerate(self) -> np.ndarray:
        """All coordinates of a finite quotient in lexicographic order."""
        if not self.is_finite:
            raise ContractError("cannot enumerate an infinite quotient")
        return self.torsion_coords()

    def box(self, radius: int, center=None) -> np.ndarray:
        """Torsion part times the free box ``|f - center| <= radius`` (sup norm)."""
        tors = self.torsion_coords()
        if self.free_rank == 0:
            return tors
        c = np.zeros(self.free_rank, dtype=np.int64) if center is None else np.asarray(center)
        rng = [range(int(ci) - radius, int(ci) + radius + 1) for ci in c]
        free = np.array(list(itertools.product(*rng)), dtype=np.int64)
        tt = np.repeat(tors, len(free), axis=0)
        ff = np.tile(free, (len(tors), 1))
        return np.concatenate([tt, ff], axis=1)

    # -- dual side ---------------------------------------------------------

    def dual_to_theta(self, torsion_index, free_angles=()) -> np.ndarray:
        u = np.zeros(self.n, dtype=float)
        j = np.asarray(torsion_index, dtype=float).reshape(-1)
        u[self._tors_idx] = TWO_PI * j / np.array(self.torsion, dtype=float) if len(j) else 0.0
        if self.free_rank:
            u[self._free_idx] = np.asarray(free_angles, dtype=float)
        return wrap_angle(self._v @ u)

    def frequency(self, torsion_index, free_angles=()) -> Frequency:
        return Frequency.of(self.dual_to_theta(torsion_index, free_angles),
                            torsion_index, free_angles if self.free_rank else None)

    def dual_coords(self, freq) -> tuple[tuple[int, ...], np.ndarray]:
        """Inverse of :meth:`dual_to_theta` for a frequency in the annihilator."""
        theta = as_theta(freq)
        self.check_member(theta)
        w = np.mod(self._v_inv @ theta, TWO_PI)
        d = np.array(self.torsion, dtype=float)
        j = np.mod(np.rint(w[self._tors_idx] * d / TWO_PI).astype(np.int64), self.torsion)
        return tuple(int(v) for v in j), wrap_angle(w[self._free_idx])

    def in_annihilator(self, freq, tol: float = EPS_FREQ) -> bool:
        theta = as_theta(freq)
        A = self.subgroup.matrix
        if not len(A):
            return True
        return bool(np.max(np.abs(np.exp(-1j * (A @ theta)) - 1.0)) <= tol)

    def check_member(self, freq, tol: float = EPS_FREQ):
        if not self.in_annihilator(freq, tol):
            raise DomainError(f"frequency {np.round(as_theta(freq), 12).tolist()} is not in the annihilator of K")

    def pairing(self, freq, coords) -> np.ndarray:
        """``<lambda, x>`` for quotient coordinates ``x`` (any representative works)."""
        return character(freq, self.section(coords))

    def lift_character(self, phases) -> np.ndarray:
        """A frequency whose character restricted to K has the given phases.

        ``phases[i]`` is the phase of ``exp(i chi . k_i)`` at the i-th generator.
        The representative is taken from the fundamental domain
        ``[0, 2pi/d_1) x ... x {0}^f`` in the dual Smith coordinates.
        """
        U, S, V = self.smith
        phi = np.mod(np.asarray(phases, dtype=float), TWO_PI)
        if len(phi) != U.shape[0]:
            raise ContractError("one phase per generator is required")
        rhs = np.mod(U @ phi, TWO_PI)
        m = self.subgroup.rank
        extra = rhs[m:]
        if extra.size and angle_distance(extra, np.zeros_like(extra)) > 1e-7:
            raise DomainError("phases are not a character of K")
        w = np.zeros(self.n)
        diag = np.diag(S) if S.size else np.zeros(0)
        w[:m] = rhs[:m] / diag[:m]
        return wrap_angle(V @ w)


def quotient(K: LatticeSubgroup) -> QuotientStructure:
    """Quotient structure of Z^n / K from the Smith form of the generators."""
    A = K.matrix
    if len(A):
        U, S, V = smith_normal_form(A)
    else:
        U, S, V = np.zeros((0, 0), np.int64), np.zeros((0, K.n), np.int64), np.eye(K.n, dtype=np.int64)
    diag = [int(S[i, i]) for i in range(min(S.shape))] if S.size else []
    m = sum(1 for v in diag if v)
    tors_idx = np.array([i for i in range(m) if diag[i] >= 2], dtype=np.int64)
    free_idx = np.arange(m, K.n, dtype=np.int64)
    return QuotientStructure(
        subgroup=K,
        torsion=tuple(diag[i] for i in tors_idx),
        free_rank=K.n - m,
        smith=(U, S, V),
        _v=V,
        _v_inv=_exact_inverse(V),
        _tors_idx=tors_idx,
        _free_idx=free_idx,
    )


# ---------------------------------------------------------------------------
# annihilator


@dataclass(frozen=True)
class LineFamily:
    """``offset + sum_j s_j * directions[j]`` (mod 2pi), free angles ``s_j``."""

    torsion_index: tuple[int, ...]
    offset: np.ndarray
    directions: np.ndarray

    def point(self, angles) -> np.ndarray:
        s = np.asarray(angles, dtype=float)
        return wrap_angle(self.offset + s @ self.directions)


@dataclass(frozen=True)
class Annihilator:
    """Lambda_K: finite list of frequencies, or finitely many affine families."""

    quotient: QuotientStructure
    frequencies: tuple[Frequency, ...] = ()
    families: tuple[LineFamily, ...] = ()

    @property
    def is_finite(self) -> bool:
        return self.quotient.is_finite

    def __len__(self):
        return len(self.frequencies) if self.is_finite else len(self.families)

    def sample(self, rng: np.random.Generator) -> Frequency:
        q = self.quotient
        j = tuple(int(rng.integers(d)) for d in q.torsion)
        s = rng.uniform(0.0, TWO_PI, size=q.free_rank)
        return q.frequency(j, s)

    def to_json(self) -> dict:
        if self.is_finite:
            return {"frequencies": [list(f.theta) for f in self.frequencies]}
        return {"families": [
            {"torsion_index": list(f.torsion_index),
             "offset": f.offset.tolist(),
             "directions": f.directions.tolist()}
            for f in self.families]}


def annihilator(K: LatticeSubgroup) -> Annihilator:
    q = K.quotient
    tors = q.torsion_coords()
    if q.is_finite:
        return Annihilator(q, frequencies=tuple(q.frequency(j) for j in tors))
    dirs = q._v[:, q._free_idx].T.astype(float)
    fams = tuple(LineFamily(tuple(int(v) for v in j), q.dual_to_theta(j, np.zeros(q.free_rank)), dirs)
                 for j in tors)
    return Annihilator(q, families=fams)


# ---------------------------------------------------------------------------
# Weil's formula on a finitely supported function


def weil_check(f: Mapping[tuple[int, ...], object], K: LatticeSubgroup):
    """Integrate ``f`` over Z^n twice: directly, and coset by coset over K.

    The quotient carries counting measure here. Sums use the value type of
    ``f`` so integer or Fraction inputs give exact results.
    """
    pts = [tuple(int(v) for v in p) for p in f]
    rhs = sum((f[p] for p in pts), 0)
    if not pts:
        return 0, rhs
    q = K.quotient
    arr = np.array(pts, dtype=np.int64)
    lo, hi = arr.min(axis=0), arr.max(axis=0)
    cosets = {tuple(c) for c in q.to_quotient(arr).tolist()}
    lhs = 0
    for x in sorted(cosets):
        s = q.section(np.array(x, dtype=np.int64))
        inner = 0
        for k in _lattice_points_in_box(K.hnf, lo - s, hi - s):
            inner = inner + f.get(tuple(int(v) for v in k + s), 0)
        lhs = lhs + inner
    return lhs, rhs


# ---------------------------------------------------------------------------
# parsing


def parse_generators(text: str) -> np.ndarray:
    """Parse ``"12,9"``, ``"2,0;0,3"`` or a JSON integer array."""
    text = (text or "").strip()
    if not text:
        raise ContractError("empty generator matrix")
    if text.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ContractError(f"bad JSON matrix: {exc}") from None
        rows = data if data and isinstance(data[0], list) else [data]
    else:
        try:
            rows = [[int(v) for v in row.split(",")] for row in text.split(";") if row.strip()]
        except ValueError:
            raise ContractError(f"cannot parse generator matrix {text!r}") from None
    if not rows or len({len(r) for r in rows}) != 1 or not rows[0]:
        raise ContractError(f"ragged or empty generator matrix {text!r}")
    return np.array(_int_rows(rows), dtype=np.int64)
