"""Constructive structure theorem on a finite window.

From a K-PC covariance restricted to a window: embed the field in C^r,
build the K-shift as commuting unitaries, diagonalize them jointly, lift the
joint eigenphases to characters of Z^n and read off ``P(t) = U^{-t} X(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractError,
    CoverageError,
    DegeneracyError,
    ModelInvalidError,
    NotPeriodicError,
    ToleranceError,
)
from .lattice import LatticeSubgroup, QuotientStructure
from .model import PCFieldModel, PeriodicField, UnitaryRep, _as_points, make_model
from .spectra import merge_locations

PHASE_TOL = 1e-7
RANK_TOL = 1e-11

TOLERANCES = {
    "gram": 1e-9,
    "shift": 1e-8,
    "commutator": 1e-8,
    "unitarity": 1e-8,
    "uk_vk": 1e-8,
    "periodicity": 1e-8,
    "roundtrip_field": 1e-10,
    "roundtrip_kernel": 1e-8,
}


# ---------------------------------------------------------------------------
# embedding


@dataclass(frozen=True)
class HilbertEmbedding:
    """Rows of ``vectors`` represent ``X(t)`` for the rows of ``window``."""

    window: np.ndarray
    vectors: np.ndarray
    gram: np.ndarray
    scale: float
    gram_error: float

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]

    def index(self) -> dict[tuple[int, ...], int]:
        return {tuple(p): i for i, p in enumerate(self.window.tolist())}


def kernel_gram(kernel, window) -> np.ndarray:
    """Gram matrix from a model, a callable ``kernel(t, s)`` or a ready matrix."""
    pts = _as_points(window)
    if isinstance(kernel, PCFieldModel):
        return kernel.kernel_matrix(pts)
    if callable(kernel):
        return np.array([[kernel(t, s) for s in pts] for t in pts], dtype=complex)
    G = np.asarray(kernel, dtype=complex)
    if G.shape != (len(pts), len(pts)):
        raise ContractError(f"Gram matrix of shape {G.shape} does not match a window of {len(pts)} points")
    return G


def embed(kernel, window, psd_tol: float = 1e-9, rank_tol: float = RANK_TOL) -> HilbertEmbedding:
    """PSD factorization ``G = E E^H`` with the eigenvalue floor at zero."""
    pts = _as_points(window)
    G = kernel_gram(kernel, pts)
    scale = float(np.max(np.abs(np.diag(G)).real, initial=0.0))
    scale = scale if scale > 0 else 1.0
    herm = float(np.max(np.abs(G - G.conj().T), initial=0.0))
    if herm > psd_tol * scale:
        raise ModelInvalidError(f"kernel is not Hermitian on the window (violation {herm:.3e})")
    Gh = (G + G.conj().T) / 2
    w, Q = np.linalg.eigh(Gh)
    if len(w) and w[0] < -psd_tol * scale:
        raise ModelInvalidError(f"kernel is not PSD on the window (min eigenvalue {w[0]:.3e})")
    keep = w > rank_tol * max(float(w[-1]) if len(w) else 0.0, 1e-300)
    E = Q[:, keep] * np.sqrt(w[keep])
    # column order: decreasing eigenvalue
    E = E[:, ::-1]
    err = float(np.max(np.abs(E @ E.conj().T - G), initial=0.0))
    return HilbertEmbedding(pts, E, G, scale, err)


# ---------------------------------------------------------------------------
# the K-shift


@dataclass(frozen=True)
class ShiftSystem:
    """Commuting unitaries ``V_i`` on C^r, one per generator of K."""

    generators: np.ndarray
    operators: np.ndarray
    eigvecs: np.ndarray
    phases: np.ndarray
    labels: np.ndarray
    residuals: dict = field(default_factory=dict)

    @property
    def clusters(self) -> list[np.ndarray]:
        return [np.nonzero(self.labels == c)[0] for c in range(int(self.labels.max()) + 1)]


def _orth_complement(M: np.ndarray, r: int, rank: int) -> np.ndarray:
    U, _, _ = np.linalg.svd(M, full_matrices=True) if M.size else (np.eye(r), None, None)
    return U[:, rank:]


def _shift_operator(emb: HilbertEmbedding, k: np.ndarray, min_overlap: int, tol: float):
    index = emb.index()
    a, b = [], []
    for i, p in enumerate(emb.window.tolist()):
        j = index.get(tuple(np.add(p, k).tolist()))
        if j is not None:
            a.append(i)
            b.append(j)
    if len(a) < max(1, min_overlap):
        raise CoverageError(f"shift by {k.tolist()} keeps {len(a)} window points; need {max(1, min_overlap)}")
    a, b = np.array(a), np.array(b)
    G = emb.gram
    viol = float(np.max(np.abs(G[np.ix_(a, a)] - G[np.ix_(b, b)])))
    if viol > tol * emb.scale:
        err = NotPeriodicError(f"kernel is not invariant under the shift {k.tolist()} (violation {viol:.3e})")
        err.violation = viol
        raise err
    r = emb.rank
    At = emb.vectors[a].T
    Bt = emb.vectors[b].T
    u, s, vh = np.linalg.svd(At, full_matrices=False)
    rho = int(np.sum(s > 1e-10 * max(s[0] if len(s) else 0.0, 1e-300)))
    Ra = u[:, :rho]
    # V Ra = Bt At^+ Ra
    image = Bt @ (vh[:rho].conj().T / s[:rho])
    Ra_perp = _orth_complement(Ra, r, rho)
    Rb_perp = _orth_complement(image, r, rho)
    V = image @ Ra.conj().T + Rb_perp @ Ra_perp.conj().T
    # nearest unitary (polar factor)
    pu, _, pvh = np.linalg.svd(V)
    V = pu @ pvh
    resid = float(np.max(np.linalg.norm(V @ At - Bt, axis=0))) / np.sqrt(emb.scale)
    return V, {"overlap": len(a), "isometry_violation": viol, "shift": resid, "completed": r - rho}


def joint_diagonalize(ops: np.ndarray, seed: int = 0, tol: float = PHASE_TOL, attempts: int = 6):
    """Joint eigenvectors and eigenphases of commuting unitaries.

    Diagonalizes a random Hermitian combination of the Hermitian and
    anti-Hermitian parts, then reads one phase per operator from each
    eigenvector. Returns ``(E, phases, labels)`` with ``labels`` grouping
    eigenvectors whose phase vectors agree within ``tol``.
    """
    m, r, _ = ops.shape
    rng = np.random.default_rng(seed)
    best = np.inf
    for _ in range(attempts):
        c = rng.standard_normal((m, 2))
        H = sum(c[i, 0] * (V + V.conj().T) / 2 + c[i, 1] * (V - V.conj().T) / 2j for i, V in enumerate(ops))
        _, E = np.linalg.eigh((H + H.conj().T) / 2)
        diag = np.einsum("ji,mjk,ki->im", E.conj(), ops, E)
        phases = np.angle(diag)
        resid = max(float(np.max(np.abs(V @ E - E * np.exp(1j * phases[:, i])))) for i, V in enumerate(ops))
        best = min(best, resid)
        if resid <= tol:
            break
    else:
        raise DegeneracyError(f"operators could not be diagonalized jointly (residual {best:.3e})")
    reps, labels = merge_locations(np.mod(phases, 2 * np.pi), tol)
    for i in range(len(reps)):
        for j in range(i):
            d = np.max(np.abs(np.mod(reps[i] - reps[j] + np.pi, 2 * np.pi) - np.pi))
            if d < 100 * tol:
                err = DegeneracyError(f"joint eigenphases {reps[i]} and {reps[j]} are too close to separate")
                err.violation = float(d)
                raise err
    return E, phases, labels


def k_shift(emb: HilbertEmbedding, K: LatticeSubgroup, min_overlap: int = 1,
            tol: float = TOLERANCES["shift"], seed: int = 0) -> ShiftSystem:
    """Unitaries implementing ``X(t) -> X(t + k_i)`` on the span of the window."""
    gens = K.matrix
    if not len(gens):
        raise ContractError("the trivial subgroup has no shift")
    ops, info = [], []
    for k in gens:
        V, meta = _shift_operator(emb, k, min_overlap, tol)
        ops.append(V)
        info.append(meta)
    ops = np.array(ops)
    comm = 0.0
    for i in range(len(ops)):
        for j in range(i):
            comm = max(comm, float(np.max(np.abs(ops[i] @ ops[j] - ops[j] @ ops[i]))))
    unit = max(float(np.max(np.abs(V.conj().T @ V - np.eye(len(V))))) for V in ops)
    if comm > TOLERANCES["commutator"]:
        err = ToleranceError(f"shift operators do not commute (violation {comm:.3e})")
        err.violation = comm
        raise err
    E, phases, labels = joint_diagonalize(ops, seed)
    res = {
        "shift": max(m["shift"] for m in info),
        "isometry_violation": max(m["isometry_violation"] for m in info),
        "overlap": [m["overlap"] for m in info],
        "completed_dims": [m["completed"] for m in info],
        "commutator": comm,
        "unitarity": unit,
    }
    return ShiftSystem(gens, ops, E, phases, labels, res)


# ---------------------------------------------------------------------------
# lifting to Z^n and the periodic part


def _gauge(B: np.ndarray) -> np.ndarray:
    """Make the first nonzero coordinate of each column real and positive."""
    B = B.copy()
    for j in range(B.shape[1]):
        col = B[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if len(nz):
            B[:, j] = col * np.exp(-1j * np.angle(col[nz[0]]))
    return B


def lift_and_extend(shift: ShiftSystem, K: LatticeSubgroup) -> UnitaryRep:
    """Unitary representation of Z^n with ``U^{k_i} = V_i``."""
    q = K.quotient
    freqs, bases = [], []
    for idx in shift.clusters:
        ph = shift.phases[idx]
        mean = np.angle(np.mean(np.exp(1j * ph), axis=0))
        freqs.append(q.lift_character(mean))
        bases.append(_gauge(shift.eigvecs[:, idx]))
    return UnitaryRep(np.array(freqs), tuple(bases), tol=1e-8)


def periodic_part(emb: HilbertEmbedding, U: UnitaryRep, quotient: QuotientStructure):
    """``P(t) = U^{-t} X(t)`` grouped by coset; returns the field and the periodicity residual."""
    Pt = U.apply(-emb.window, emb.vectors)
    coords = quotient.to_quotient(emb.window)
    keys, inv = np.unique(coords, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    values, resid = {}, 0.0
    for g, key in enumerate(keys):
        rows = Pt[inv == g]
        mean = rows.mean(axis=0)
        values[tuple(int(v) for v in key)] = mean
        resid = max(resid, float(np.max(np.linalg.norm(rows - rows[0], axis=1))))
    return PeriodicField(quotient, U.dim, values), resid


@dataclass(frozen=True)
class Decomposition:
    model: PCFieldModel
    embedding: HilbertEmbedding
    shift: ShiftSystem
    report: dict

    def check(self) -> "Decomposition":
        """Raise :class:`ToleranceError` when a residual exceeds its tolerance."""
        bad = {k: v for k, v in self.report["residuals"].items()
               if k in self.report["tolerances"] and v > self.report["tolerances"][k]}
        if bad:
            err = ToleranceError(f"decomposition residuals exceed tolerance: {bad}")
            err.violation = max(bad.values())
            raise err
        return self


def decompose(kernel, window, K: LatticeSubgroup, min_overlap: int = 1, seed: int = 0) -> Decomposition:
    """Recover ``(U, P)`` with ``X(t) = U^t P(t)`` from a K-PC kernel on a window.

    Residuals are reported relative to the largest variance on the window
    (``uk_vk``, ``commutator`` and ``unitarity`` are absolute).
    """
    emb = embed(kernel, window)
    shift = k_shift(emb, K, min_overlap=min_overlap, seed=seed)
    U = lift_and_extend(shift, K)
    q = K.quotient
    P, per = periodic_part(emb, U, q)
    model = make_model(U, P)
    uk = max(float(np.max(np.abs(U.operator(k) - V))) for k, V in zip(K.matrix, shift.operators))
    xr = model.X(emb.window)
    field_err = float(np.max(np.linalg.norm(xr - emb.vectors, axis=1)))
    kern_err = float(np.max(np.abs(model.kernel_matrix(emb.window) - emb.gram)))
    s = emb.scale
    residuals = {
        "gram": emb.gram_error / s,
        "shift": shift.residuals["shift"],
        "commutator": shift.residuals["commutator"],
        "unitarity": shift.residuals["unitarity"],
        "uk_vk": uk,
        "periodicity": per / np.sqrt(s),
        "roundtrip_field": field_err / np.sqrt(s),
        "roundtrip_kernel": kern_err / s,
    }
    report = {
        "window_points": len(emb.window),
        "rank": emb.rank,
        "scale": s,
        "atoms": len(U.freqs),
        "eigenspace_dims": [b.shape[1] for b in U.bases],
        "cosets_seen": len(P.values),
        "quotient_finite": q.is_finite,
        "overlap": shift.residuals["overlap"],
        "completed_dims": shift.residuals["completed_dims"],
        "isometry_violation": shift.residuals["isometry_violation"] / s,
        "residuals": {k: float(v) for k, v in residuals.items()},
        "tolerances": dict(TOLERANCES),
    }
    return Decomposition(model, emb, shift, report)


# ---------------------------------------------------------------------------
# Gladyshev components


@dataclass(frozen=True)
class GladyshevFamily:
    """``X^lambda(t) = U^t P^(lambda)`` for every ``lambda`` of a finite annihilator."""

    U: UnitaryRep
    lambdas: np.ndarray
    coefficients: np.ndarray

    def __len__(self):
        return len(self.lambdas)

    def component(self, i: int, points) -> np.ndarray:
        pts = _as_points(points)
        return self.U.apply(pts, np.tile(self.coefficients[i], (len(pts), 1)))

    def reconstruct(self, points) -> np.ndarray:
        """``X(t) = sum_lambda exp(+i lambda . t) X^lambda(t)``."""
        pts = _as_points(points)
        out = np.zeros((len(pts), self.U.dim), dtype=complex)
        for i, lam in enumerate(self.lambdas):
            out += np.exp(1j * (pts @ lam))[:, None] * self.component(i, pts)
        return out

    def cross_covariance(self, i: int, j: int, t, s) -> complex:
        """``(X^{lambda_i}(t), X^{lambda_j}(s))``."""
        return complex(np.vdot(self.component(j, s)[0], self.component(i, t)[0]))


def gladyshev_components(U: UnitaryRep, P: PeriodicField) -> GladyshevFamily:
    q = P.quotient
    if not q.is_finite:
        raise ContractError("Gladyshev components need a finite annihilator (finite quotient)")
    coords = q.enumerate()
    vals = P.at(coords)
    secs = q.section(coords)
    lams = np.array([q.dual_to_theta(j) for j in q.torsion_coords()]).reshape(-1, q.n)
    ch = np.exp(-1j * (lams @ secs.T))
    return GladyshevFamily(U, lams, ch @ vals / q.torsion_order)
