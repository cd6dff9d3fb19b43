"""JSON, CSV and npz formats.

JSON is canonical: complex numbers are ``[re, im]`` pairs, keys are sorted
and floats are written with ``repr`` precision, so identical inputs give
byte-identical files. Quotient coordinates are keyed as ``"r1,...,f1,..."``.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .errors import ContractError
from .lattice import LatticeSubgroup
from .model import Envelope, PCFieldModel, PeriodicField, Realizations, UnitaryRep, make_model

MODEL_FORMAT = "pcfield-model/1"
KERNEL_FORMAT = "pcfield-kernel/1"
PATHS_FORMAT = "pcfield-paths/1"


def cpair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def cvec(v) -> list[list[float]]:
    return [cpair(z) for z in np.asarray(v).ravel()]


def from_pairs(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.shape[-1] != 2:
        raise ContractError("complex values must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def _key(x) -> str:
    return ",".join(str(int(v)) for v in x)


def _unkey(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.split(",")) if s else ()


# ---------------------------------------------------------------------------
# models


def model_to_json(model: PCFieldModel, truncation: int | None = None) -> dict:
    """Serialize a model; callable fields are tabulated on their truncation box."""
    q = model.quotient
    sup = model.P.support(truncation)
    values = {_key(x): cvec(v) for x, v in zip(sup.coords.tolist(), sup.values) if np.any(v)}
    periodic = {
        "quotient": {
            "generators": q.subgroup.matrix.tolist(),
            "torsion": list(q.torsion),
            "free_rank": q.free_rank,
        },
        "values": values,
    }
    if model.P.envelope is not None:
        periodic["envelope"] = {"scale": model.P.envelope.scale, "rate": model.P.envelope.rate}
    if sup.tail_sq:
        periodic["tail_sq"] = sup.tail_sq
    return {
        "format": MODEL_FORMAT,
        "n": model.n,
        "dim": model.dim,
        "atoms": [{"freq": f.tolist(), "basis": [cvec(col) for col in B.T]}
                  for f, B in zip(model.U.freqs, model.U.bases)],
        "periodic": periodic,
    }


def model_from_json(data: dict) -> PCFieldModel:
    try:
        n = int(data["n"])
        dim = int(data["dim"])
        freqs = np.array([a["freq"] for a in data["atoms"]], dtype=float).reshape(-1, n)
        bases = tuple(from_pairs(a["basis"]).T.reshape(dim, -1) for a in data["atoms"])
        per = data["periodic"]
        gens = per["quotient"]["generators"]
        K = LatticeSubgroup.from_generators(gens, n=n)
        q = K.quotient
        if list(q.torsion) != list(per["quotient"].get("torsion", q.torsion)) or \
                q.free_rank != per["quotient"].get("free_rank", q.free_rank):
            raise ContractError("stored quotient does not match the generators")
        values = {_unkey(k): from_pairs(v) for k, v in per["values"].items()}
        env = per.get("envelope")
        envelope = Envelope(float(env["scale"]), float(env["rate"])) if env else None
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ContractError):
            raise
        raise ContractError(f"malformed model JSON: {exc!r}") from None
    return make_model(UnitaryRep(freqs, bases), PeriodicField(q, dim, values, envelope))


# ---------------------------------------------------------------------------
# kernels


def kernel_to_json(model: PCFieldModel, window) -> dict:
    pts = np.atleast_2d(np.asarray(window, dtype=np.int64))
    G = model.kernel_matrix(pts)
    return {
        "format": KERNEL_FORMAT,
        "n": model.n,
        "generators": model.subgroup.matrix.tolist(),
        "window": pts.tolist(),
        "gram": [cvec(row) for row in G],
    }


def kernel_from_json(data: dict) -> tuple[np.ndarray, np.ndarray, LatticeSubgroup]:
    try:
        n = int(data["n"])
        pts = np.array(data["window"], dtype=np.int64).reshape(-1, n)
        G = from_pairs(data["gram"])
        K = LatticeSubgroup.from_generators(data["generators"], n=n)
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractError(f"malformed kernel JSON: {exc!r}") from None
    if G.shape != (len(pts), len(pts)):
        raise ContractError("Gram matrix does not match the window")
    return pts, G, K


# ---------------------------------------------------------------------------
# realizations


def paths_to_json(real: Realizations) -> dict:
    return {
        "format": PATHS_FORMAT,
        "seed": real.seed,
        "points": real.points.tolist(),
        "paths": [cvec(row) for row in real.paths],
    }


def paths_from_json(data: dict) -> Realizations:
    try:
        pts = np.array(data["points"], dtype=np.int64)
        paths = from_pairs(data["paths"]).reshape(-1, len(pts))
        return Realizations(pts.reshape(len(pts), -1), paths, int(data.get("seed", -1)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractError(f"malformed paths JSON: {exc!r}") from None


def paths_to_csv(real: Realizations, header: str | None = None) -> str:
    """Rows ``path, t1..tn, re, im``; ``header`` lines are written as ``#`` comments."""
    buf = _io.StringIO()
    if header:
        for line in header.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    n = real.points.shape[1]
    w.writerow(["path"] + [f"t{i + 1}" for i in range(n)] + ["re", "im"])
    for k, row in enumerate(real.paths):
        for p, z in zip(real.points.tolist(), row):
            w.writerow([k] + p + [repr(float(z.real)), repr(float(z.imag))])
    return buf.getvalue()


def paths_from_csv(text: str) -> Realizations:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    head, body = rows[0], rows[1:]
    n = len(head) - 3
    data = np.array(body, dtype=float)
    count = int(data[:, 0].max()) + 1 if len(data) else 0
    per = len(data) // max(count, 1)
    pts = data[:per, 1:1 + n].astype(np.int64)
    z = (data[:, -2] + 1j * data[:, -1]).reshape(count, per)
    return Realizations(pts, z, -1)


def save_paths_npz(real: Realizations, path: str | Path, meta: str = "") -> None:
    """Binary column format: ``points`` (int64, N x n), ``re`` and ``im``
    (float64, count x N), ``seed`` and a JSON ``meta`` string."""
    np.savez(path, points=real.points, re=real.paths.real, im=real.paths.imag,
             seed=np.int64(real.seed), meta=np.array(meta))


def load_paths_npz(path: str | Path) -> Realizations:
    with np.load(path) as f:
        return Realizations(f["points"], f["re"] + 1j * f["im"], int(f["seed"]))


def load_paths(path: str | Path) -> Realizations:
    p = Path(path)
    if p.suffix == ".npz":
        return load_paths_npz(p)
    text = p.read_text()
    if text.lstrip().startswith("{"):
        return paths_from_json(json.loads(text))
    return paths_from_csv(text)


def rows_to_csv(header: list[str], rows, comments: str | None = None) -> str:
    buf = _io.StringIO()
    if comments:
        for line in comments.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()
