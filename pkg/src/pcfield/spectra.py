"""Spectral covariance, the Z-fields and second-order spectral measures.

Quotient sums use the Haar measure that gives each torsion class mass
``1/|torsion|`` and each free coordinate mass 1, so on a finite quotient it
is the probability measure and

    a_lambda(t) = (1/|G/K|) sum_x <lambda, x> B_X(t; x).

All sums over an infinite quotient are truncated to a box of the free
coordinates and carry a tail bound derived from the model envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CoverageError, DomainError, NotSquareIntegrableError, UndecidableError
from .lattice import (
    EPS_FREQ,
    TWO_PI,
    LatticeSubgroup,
    QuotientStructure,
    as_theta,
    character,
    wrap_angle,
)
from .model import DEFAULT_TRUNCATION, PCFieldModel, Realizations, _as_points


class Bounded(NamedTuple):
    """A computed value and a bound on the error of truncation."""

    value: complex
    tail_bound: float


def _torus_dist_rows(a: np.ndarray, b) -> np.ndarray:
    d = np.mod(a - np.asarray(b, dtype=float) + np.pi, TWO_PI) - np.pi
    return np.max(np.abs(d), axis=-1) if d.shape[-1] else np.zeros(d.shape[:-1])


def merge_locations(locs: np.ndarray, tol: float = EPS_FREQ) -> tuple[np.ndarray, np.ndarray]:
    """Cluster torus points closer than ``tol``; returns (representatives, labels)."""
    locs = wrap_angle(np.asarray(locs, dtype=float))
    labels = np.full(len(locs), -1, dtype=np.int64)
    reps = []
    for i in range(len(locs)):
        if labels[i] >= 0:
            continue
        near = np.nonzero((labels[i:] < 0) & (_torus_dist_rows(locs[i:], locs[i]) <= tol))[0] + i
        labels[near] = len(reps)
        reps.append(locs[i])
    return np.array(reps, dtype=float).reshape(len(reps), locs.shape[1]), labels


# ---------------------------------------------------------------------------
# summation domains


class _Domain(NamedTuple):
    coords: np.ndarray
    tail_sq: float      # bound on sum of ||P_K||^2 off the domain, per shifted factor
    total_sq: float


def _domain(model: PCFieldModel, shifts, truncation: int | None) -> _Domain:
    """Coordinates ``x`` over which sums of products ``f(x + c)`` are taken.

    ``shifts`` are quotient coordinate offsets ``c``. On an infinite quotient
    the returned box is wide enough that, for every shift, ``x`` outside the
    box puts ``x + c`` outside the centred box of radius ``truncation``.
    """
    q = model.quotient
    P = model.P
    shifts = np.atleast_2d(np.asarray(shifts, dtype=np.int64))
    if q.is_finite:
        return _Domain(q.enumerate(), 0.0, float("nan"))
    if P.finite_support:
        sup = P.support()
        keys = [q.sub(sup.coords, c) for c in shifts]
        allk = np.unique(np.concatenate(keys, axis=0), axis=0) if keys else sup.coords
        return _Domain(allk, 0.0, sup.total_sq)
    if P.envelope is None:
        raise UndecidableError("infinite quotient with a callable field needs a decay envelope")
    if P.envelope.rate >= 1:
        raise NotSquareIntegrableError("field envelope does not decay")
    L = DEFAULT_TRUNCATION if truncation is None else int(truncation)
    free = q.free_part(shifts)
    lo, hi = free.min(axis=0), free.max(axis=0)
    center = -np.floor((lo + hi) / 2).astype(np.int64)
    radius = L + int(np.max(np.ceil((hi - lo) / 2))) + 1
    env = P.envelope
    return _Domain(q.box(radius, center), env.tail_sq(q.torsion_order, q.free_rank, L),
                   env.total_sq(q.torsion_order, q.free_rank))


def _check_lambda(q: QuotientStructure, lam) -> np.ndarray:
    theta = as_theta(lam)
    if theta.shape != (q.n,):
        raise DomainError(f"frequency has {theta.shape[0]} angles, expected {q.n}")
    q.check_member(theta)
    return wrap_angle(theta)


# ---------------------------------------------------------------------------
# spectral covariance


def spectral_covariance(model: PCFieldModel, lam, t, truncation: int | None = None) -> Bounded:
    """``a_lambda(t)`` with a bound on the truncation error."""
    q = model.quotient
    theta = _check_lambda(q, lam)
    t = np.asarray(t, dtype=np.int64)
    c = q.to_quotient(t)
    dom = _domain(model, [np.zeros_like(c), c], truncation)
    x = dom.coords
    if not len(x):
        return Bounded(0j, 0.0)
    p0 = model.P.at(x)
    pt = model.U.apply(np.tile(t, (len(x), 1)), model.P.at(q.add(x, c)))
    B = np.einsum("ij,ij->i", pt, p0.conj())
    value = complex(np.sum(character(theta, q.section(x)) * B)) / q.torsion_order
    return Bounded(value, dom.tail_sq / q.torsion_order)


def spectral_covariance_table(model: PCFieldModel, lambdas, lags, truncation: int | None = None):
    """Rows ``(lambda, t, value, tail_bound)`` for every pair."""
    rows = []
    for lam in lambdas:
        for t in _as_points(lags):
            v = spectral_covariance(model, lam, t, truncation)
            rows.append((wrap_angle(as_theta(lam)), np.asarray(t), v.value, v.tail_bound))
    return rows


def b_function(model: PCFieldModel, t, coords=None) -> tuple[np.ndarray, np.ndarray]:
    """``B_X(t; x)`` on ``coords`` (default: every coset of a finite quotient)."""
    q = model.quotient
    x = q.enumerate() if coords is None else np.atleast_2d(coords)
    return x, model.B_many(t, x)


def parseval_sides(model: PCFieldModel, t) -> tuple[float, float]:
    """``sum_lambda |a_lambda(t)|^2`` and ``(1/|G/K|) sum_x |B_X(t; x)|^2``."""
    q = model.quotient
    if not q.is_finite:
        raise UndecidableError("Parseval check needs a finite quotient")
    lhs = sum(abs(spectral_covariance(model, f, t).value) ** 2 for f in _finite_dual(q))
    _, B = b_function(model, t)
    return float(lhs), float(np.sum(np.abs(B) ** 2) / q.torsion_order)


def reconstruct_b(model: PCFieldModel, t, coords) -> np.ndarray:
    """``sum_lambda conj<lambda, x> a_lambda(t)`` over a finite dual."""
    q = model.quotient
    if not q.is_finite:
        raise UndecidableError("series reconstruction needs a finite quotient")
    pts = q.section(np.atleast_2d(coords))
    out = np.zeros(len(pts), dtype=complex)
    for f in _finite_dual(q):
        out += np.conj(character(f, pts)) * spectral_covariance(model, f, t).value
    return out


def _finite_dual(q: QuotientStructure) -> list[np.ndarray]:
    return [q.dual_to_theta(j) for j in q.torsion_coords()]


# ---------------------------------------------------------------------------
# the Z-fields


@dataclass(frozen=True)
class ZField:
    """``Z^lambda(t)`` tabulated on quotient coordinates."""

    coords: np.ndarray
    values: np.ndarray
    tail_sq: float
    torsion_order: int

    def inner(self, other: "ZField") -> complex:
        if self.coords.shape != other.coords.shape or np.any(self.coords != other.coords):
            raise CoverageError("Z-fields tabulated on different coordinates")
        return complex(np.sum(self.values * other.values.conj())) / self.torsion_order

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2)) / self.torsion_order


def z_field(model: PCFieldModel, lam, t, coords=None, truncation: int | None = None) -> ZField:
    """``Z^lambda(t)(x) = <lambda, i(t) + x> X(t + xi(x))``."""
    q = model.quotient
    theta = _check_lambda(q, lam)
    t = np.asarray(t, dtype=np.int64)
    c = q.to_quotient(t)
    if coords is None:
        dom = _domain(model, [c], truncation)
        x, tail = dom.coords, dom.tail_sq
    else:
        x, tail = np.atleast_2d(np.asarray(coords, dtype=np.int64)), math.nan
    vals = model.X(t + q.section(x)) if len(x) else np.zeros((0, model.dim), complex)
    ch = character(theta, q.section(q.add(x, c))) if len(x) else np.zeros(0)
    return ZField(x, ch[:, None] * vals, tail, q.torsion_order)


class ScorrResult(NamedTuple):
    lhs: complex
    rhs: complex
    tail_bound: float


def scorr_check(model: PCFieldModel, lam, mu, t, s, truncation: int | None = None) -> ScorrResult:
    """Both sides of ``(Z^lambda(t), Z^mu(s)) = <lambda, t - s> a_{lambda - mu}(t - s)``."""
    q = model.quotient
    lam = _check_lambda(q, lam)
    mu = _check_lambda(q, mu)
    t = np.asarray(t, dtype=np.int64)
    s = np.asarray(s, dtype=np.int64)
    dom = _domain(model, [q.to_quotient(t), q.to_quotient(s)], truncation)
    zl = z_field(model, lam, t, dom.coords)
    zm = z_field(model, mu, s, dom.coords)
    lhs = zl.inner(zm)
    a = spectral_covariance(model, wrap_angle(lam - mu), t - s, truncation)
    rhs = complex(character(lam, t - s)) * a.value
    return ScorrResult(lhs, rhs, dom.tail_sq / q.torsion_order + a.tail_bound)


def posdef_matrix(model: PCFieldModel, lambdas, points, truncation: int | None = None):
    """``M[j, k] = <lambda_j, t_j - t_k> a_{lambda_j - lambda_k}(t_j - t_k)`` and its tail bound."""
    q = model.quotient
    lams = [_check_lambda(q, lam) for lam in lambdas]
    pts = _as_points(points)
    if len(lams) != len(pts):
        raise DomainError("one frequency per point is required")
    m = len(lams)
    M = np.zeros((m, m), dtype=complex)
    tail = 0.0
    for j in range(m):
        for k in range(m):
            tau = pts[j] - pts[k]
            a = spectral_covariance(model, wrap_angle(lams[j] - lams[k]), tau, truncation)
            M[j, k] = character(lams[j], tau) * a.value
            tail = max(tail, a.tail_bound)
    return M, tail


def posdef_check(model: PCFieldModel, lambdas, points, truncation: int | None = None) -> float:
    """Smallest eigenvalue of the Hermitian part of :func:`posdef_matrix`."""
    M, _ = posdef_matrix(model, lambdas, points, truncation)
    return float(np.linalg.eigvalsh((M + M.conj().T) / 2)[0])


def z_span_ranks(model: PCFieldModel, lags, tol: float = 1e-9) -> tuple[int, int]:
    """Rank of ``{Z^lambda(t)}`` against ``|G/K| * dim span{X(t)}`` on a finite quotient.

    The Z-fields live in ``L^2(G/K; H_X)``; equal ranks mean they span it.
    """
    q = model.quotient
    if not q.is_finite:
        raise UndecidableError("span comparison needs a finite quotient")
    pts = _as_points(lags)
    rows = [z_field(model, f, t).values.ravel() for f in _finite_dual(q) for t in pts]
    Z = np.array(rows)
    X = model.X(np.concatenate([pts + s for s in q.section(q.enumerate())]))
    sz = np.linalg.svd(Z, compute_uv=False)
    sx = np.linalg.svd(X, compute_uv=False)
    rz = int(np.sum(sz > tol * max(sz[0], 1e-300)))
    rx = int(np.sum(sx > tol * max(sx[0], 1e-300)))
    return rz, q.torsion_order * rx


# ---------------------------------------------------------------------------
# dual expansion and the spectral measures


@dataclass(frozen=True)
class DualGrid:
    """Points of the annihilator with quadrature weights.

    Finite quotient: every character, weight 1. Infinite quotient: every
    torsion class times ``resolution`` equally spaced angles per free
    coordinate, weight ``resolution ** -f``.
    """

    nus: np.ndarray
    weights: np.ndarray
    resolution: int


def dual_grid(q: QuotientStructure, resolution: int = 1) -> DualGrid:
    tors = q.torsion_coords()
    if q.is_finite:
        nus = np.array([q.dual_to_theta(j) for j in tors]).reshape(len(tors), q.n)
        return DualGrid(nus, np.ones(len(nus)), 1)
    M = int(resolution)
    angles = TWO_PI * np.arange(M) / M
    mesh = np.stack([g.ravel() for g in np.meshgrid(*[angles] * q.free_rank, indexing="ij")], axis=1)
    nus = np.array([q.dual_to_theta(j, w) for j in tors for w in mesh])
    return DualGrid(nus, np.full(len(nus), float(M) ** -q.free_rank), M)


class _Expansion(NamedTuple):
    coords: np.ndarray
    values: np.ndarray
    sections: np.ndarray
    tail_sq: float
    torsion_order: int


def _expansion(model: PCFieldModel, truncation: int | None) -> _Expansion:
    q = model.quotient
    sup = model.P.support(truncation)
    return _Expansion(sup.coords, sup.values, q.section(sup.coords), sup.tail_sq, q.torsion_order)


def _fourier_p(exp: _Expansion, nus: np.ndarray) -> np.ndarray:
    """``P^(nu) = (1/|torsion|) sum_x <nu, x> P_K(x)`` for each row of ``nus``."""
    if not len(exp.coords):
        return np.zeros((len(nus), exp.values.shape[1] if exp.values.ndim == 2 else 0), complex)
    ch = np.exp(-1j * (nus @ exp.sections.T))
    return ch @ exp.values / exp.torsion_order


def _projected(model: PCFieldModel, vecs: np.ndarray) -> list[np.ndarray]:
    return [(vecs @ B.conj()) @ B.T for B in model.U.bases]


def _default_resolution(model: PCFieldModel, truncation: int | None, max_lag: int | None) -> int:
    if model.quotient.is_finite:
        return 1
    L = DEFAULT_TRUNCATION if truncation is None else int(truncation)
    if model.P.finite_support and len(model.P.support().coords):
        L = int(np.max(np.abs(model.quotient.free_part(model.P.support().coords)), initial=0))
    Y = L if max_lag is None else int(max_lag)
    return 2 * L + 2 * Y + 1


@dataclass(frozen=True)
class AtomicMeasure:
    """Complex atomic measure on the torus."""

    locations: np.ndarray
    weights: np.ndarray

    @property
    def variation(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def __len__(self):
        return len(self.weights)

    def fourier(self, t) -> complex:
        """``sum_atoms exp(+i chi . t) w``."""
        return complex(np.sum(np.exp(1j * (self.locations @ np.asarray(t, dtype=float))) * self.weights))

    def support(self, rel_tol: float = 1e-12, scale: float | None = None) -> np.ndarray:
        s = self.variation if scale is None else scale
        return self.locations[np.abs(self.weights) > rel_tol * max(s, 1e-300)]

    def to_json(self) -> list[dict]:
        return [{"location": loc.tolist(), "weight": [w.real, w.imag]}
                for loc, w in zip(self.locations, self.weights)]


def _measure(locs: np.ndarray, weights: np.ndarray, atol: float) -> AtomicMeasure:
    reps, labels = merge_locations(locs)
    w = np.zeros(len(reps), dtype=complex)
    np.add.at(w, labels, weights)
    keep = np.abs(w) > atol
    return AtomicMeasure(reps[keep], w[keep])


def gamma(model: PCFieldModel, lam, mu, truncation: int | None = None,
          resolution: int | None = None, max_lag: int | None = None) -> AtomicMeasure:
    """``Gamma^{lambda, mu}``: atoms ``chi_j + nu`` with weight ``w (Proj_j P^(nu+lambda), Proj_j P^(nu+mu))``."""
    q = model.quotient
    lam = _check_lambda(q, lam)
    mu = _check_lambda(q, mu)
    exp = _expansion(model, truncation)
    grid = dual_grid(q, resolution or _default_resolution(model, truncation, max_lag))
    cl = _projected(model, _fourier_p(exp, grid.nus + lam))
    cm = _projected(model, _fourier_p(exp, grid.nus + mu))
    locs, wts = [], []
    for j, chi in enumerate(model.U.freqs):
        locs.append(grid.nus + chi)
        wts.append(grid.weights * np.einsum("ij,ij->i", cl[j], cm[j].conj()))
    scale = float(np.sum(np.abs(exp.values) ** 2)) / q.torsion_order
    return _measure(np.concatenate(locs), np.concatenate(wts), 1e-15 * max(scale, 1e-300))


def gamma_lambda(model: PCFieldModel, lam, truncation: int | None = None,
                 resolution: int | None = None, max_lag: int | None = None) -> AtomicMeasure:
    """``gamma_lambda = Gamma^{0, -lambda}``, whose Fourier transform is ``a_lambda``."""
    lam = _check_lambda(model.quotient, lam)
    return gamma(model, np.zeros(model.n), wrap_angle(-lam), truncation, resolution, max_lag)


def gamma_from_lags(model: PCFieldModel, lam, locations, lags, truncation: int | None = None) -> np.ndarray:
    """Least-squares weights at given locations fitted to ``a_lambda`` on ``lags``.

    An independent cross-check of :func:`gamma_lambda` through the lag domain.
    """
    pts = _as_points(lags)
    a = np.array([spectral_covariance(model, lam, t, truncation).value for t in pts])
    E = np.exp(1j * (pts @ np.asarray(locations, dtype=float).T))
    w, *_ = np.linalg.lstsq(E, a, rcond=None)
    return w


@dataclass(frozen=True)
class SOSpectrum:
    """Atomic second-order spectrum.

    ``X(t) = sum_a exp(+i alpha_a . t) v_a`` with distinct locations
    ``alpha_a``; the spectrum has weight ``W[a, b] = (v_a, v_b)`` at
    ``(alpha_a, alpha_b)``, which lies on the hyperplane ``L_lambda`` with
    ``lambda = alpha_a - alpha_b``.
    """

    locations: np.ndarray
    vectors: np.ndarray
    quotient: QuotientStructure
    tail_sq: float

    @property
    def weights(self) -> np.ndarray:
        return self.vectors @ self.vectors.conj().T

    @property
    def variation(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def field(self, points) -> np.ndarray:
        E = np.exp(1j * (_as_points(points) @ self.locations.T))
        return E @ self.vectors

    def kernel_matrix(self, points_a, points_b=None) -> np.ndarray:
        """``sum_{a,b} exp(i(alpha_a . t - alpha_b . s)) W[a, b]``."""
        fa = self.field(points_a)
        fb = fa if points_b is None else self.field(points_b)
        return fa @ fb.conj().T

    def atoms(self, rel_tol: float = 1e-13):
        """Nonzero atoms ``(alpha, beta, weight)``."""
        W = self.weights
        thr = rel_tol * max(float(np.max(np.abs(W), initial=0.0)), 1e-300)
        ia, ib = np.nonzero(np.abs(W) > thr)
        return self.locations[ia], self.locations[ib], W[ia, ib]

    def slice(self, lam, rel_tol: float = 1e-13):
        """Atoms of ``F_lambda``: those with ``alpha - beta = lambda``."""
        a, b, w = self.atoms(rel_tol)
        keep = _torus_dist_rows(a - b, as_theta(lam)) <= EPS_FREQ
        return a[keep], b[keep], w[keep]

    def hyperplane_violation(self, rel_tol: float = 1e-13) -> float:
        """Largest distance of ``alpha - beta`` from the annihilator over nonzero atoms."""
        a, b, _ = self.atoms(rel_tol)
        A = self.quotient.subgroup.matrix
        if not len(a) or not len(A):
            return 0.0
        diff = a - b
        return float(np.max(np.abs(np.exp(-1j * (diff @ A.T)) - 1.0)))

    def is_diagonal(self, rel_tol: float = 1e-13) -> bool:
        a, b, _ = self.atoms(rel_tol)
        return bool(np.all(_torus_dist_rows(a, b) <= EPS_FREQ))


def so_spectrum(model: PCFieldModel, truncation: int | None = None,
                resolution: int | None = None, max_lag: int | None = None) -> SOSpectrum:
    """Second-order spectrum of the (truncated) model.

    On an infinite quotient the dual is replaced by an exact quadrature grid,
    so the spectrum reproduces the kernel of the truncated field exactly at
    points whose free quotient coordinates stay within ``max_lag``.
    """
    q = model.quotient
    exp = _expansion(model, truncation)
    grid = dual_grid(q, resolution or _default_resolution(model, truncation, max_lag))
    c = _projected(model, _fourier_p(exp, grid.nus))
    locs, vecs = [], []
    for j, chi in enumerate(model.U.freqs):
        locs.append(grid.nus + chi)
        vecs.append(grid.weights[:, None] * c[j])
    locs = np.concatenate(locs)
    vecs = np.concatenate(vecs)
    norms = np.linalg.norm(vecs, axis=1)
    keep = norms > 1e-15 * max(float(np.max(norms, initial=0.0)), 1e-300)
    reps, labels = merge_locations(locs[keep])
    merged = np.zeros((len(reps), model.dim), dtype=complex)
    np.add.at(merged, labels, vecs[keep])
    return SOSpectrum(reps, merged, q, exp.tail_sq)


# ---------------------------------------------------------------------------
# estimation from sample paths


def _estimator_weights(real_points: np.ndarray, K: LatticeSubgroup, lam, t) -> np.ndarray:
    """Matrix ``C`` with ``a_hat = mean over paths of x^T C conj(x)``."""
    q = K.quotient
    theta = _check_lambda(q, lam)
    pts = _as_points(real_points)
    t = np.asarray(t, dtype=np.int64)
    index = {tuple(p): i for i, p in enumerate(pts.tolist())}
    pairs = [(index[tuple((p + t).tolist())], i) for i, p in enumerate(pts)
             if tuple((p + t).tolist()) in index]
    if not pairs:
        raise CoverageError(f"window has no pair at lag {t.tolist()}")
    first = np.array([b for _, b in pairs])
    coset = q.to_quotient(pts[first])
    keys, inv = np.unique(coset, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    if q.is_finite and len(keys) < q.torsion_order:
        raise CoverageError(
            f"lag {t.tolist()} sees {len(keys)} of {q.torsion_order} cosets; enlarge the window")
    counts = np.bincount(inv, minlength=len(keys))
    ch = character(theta, q.section(keys))
    C = np.zeros((len(pts), len(pts)), dtype=complex)
    for (a, b), g in zip(pairs, inv):
        C[a, b] += ch[g] / counts[g] / q.torsion_order
    return C


def estimate_spectral_covariance(real: Realizations, K: LatticeSubgroup, lam, t) -> complex:
    """Ensemble and coset average estimate of ``a_lambda(t)``.

    On an infinite quotient the sum runs over the cosets seen in the window.
    """
    C = _estimator_weights(real.points, K, lam, t)
    x = real.paths
    return complex(np.mean(np.einsum("ni,ij,nj->n", x, C, x.conj())))


def estimator_variance(model: PCFieldModel, points, lam, t) -> float:
    """Single-path variance of the estimator for a circular complex Gaussian field."""
    C = _estimator_weights(points, model.subgroup, lam, t)
    Kw = model.kernel_matrix(_as_points(points))
    # E|x^T C conj(x)|^2 - |E.|^2 by Isserlis
    return float(np.real(np.sum(C * (Kw @ C.conj() @ Kw))))
