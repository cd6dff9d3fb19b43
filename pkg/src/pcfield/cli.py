"""Command-line front end.

Exit codes: 0 success, 2 contract violation (bad input), 3 a numerical
residual above tolerance.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ContractError, ToleranceError
from .lattice import LatticeSubgroup, annihilator, parse_generators, wrap_angle
from .model import DEFAULT_TRUNCATION, PCFieldModel, box_window, sample_paths
from .presets import preset
from .spectra import (
    estimate_spectral_covariance,
    gamma_lambda,
    so_spectrum,
    spectral_covariance,
)
from .structure import decompose
from .wpc2 import WpcParams, figure_data
from . import io

EXIT_OK, EXIT_CONTRACT, EXIT_TOLERANCE = 0, 2, 3

_ANGLE = re.compile(r"^([+-]?)(\d*\.?\d*(?:e[+-]?\d+)?)?\*?(pi)?(?:/(\d+(?:\.\d*)?))?$", re.I)


def parse_angle(text: str) -> float:
    """``"1.5"``, ``"pi"``, ``"2pi/3"``, ``"-pi/2"``, ``"2*pi/3"``."""
    m = _ANGLE.match(text.strip().replace(" ", ""))
    if not m or not (m.group(2) or m.group(3)):
        raise ContractError(f"cannot parse angle {text!r}")
    sign, num, pi, den = m.groups()
    v = float(num) if num else 1.0
    if pi:
        v *= np.pi
    if den:
        v /= float(den)
    return -v if sign == "-" else v


def parse_lambdas(text: str) -> list[np.ndarray]:
    """Frequencies separated by ``;``, angles by ``,``."""
    return [np.array([parse_angle(a) for a in part.split(",")]) for part in text.split(";") if part.strip()]


def parse_window(text: str) -> np.ndarray:
    """``"a..b,c..d"`` (one range per axis) or a JSON list of points."""
    text = text.strip()
    if text.startswith("["):
        try:
            return np.array(json.loads(text), dtype=np.int64).reshape(len(json.loads(text)), -1)
        except (ValueError, TypeError) as exc:
            raise ContractError(f"bad window {text!r}: {exc}") from None
    ranges = []
    for part in text.split(","):
        m = re.fullmatch(r"\s*(-?\d+)\s*(?:\.\.\s*(-?\d+))?\s*", part)
        if not m:
            raise ContractError(f"bad window range {part!r}")
        a = int(m.group(1))
        b = int(m.group(2)) if m.group(2) is not None else a
        if b < a:
            raise ContractError(f"empty window range {part!r}")
        ranges.append((a, b))
    return box_window(*ranges)


def load_model(source: str) -> PCFieldModel:
    if source.startswith("preset:"):
        return preset(source.split(":", 1)[1])
    try:
        data = json.loads(Path(source).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ContractError(f"cannot read model {source!r}: {exc}") from None
    return io.model_from_json(data)


def _meta(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out") and v is not None}
    return {"tool": "pcfield", "version": __version__, "config": cfg}


def _emit(args, obj=None, csv_text=None):
    text = csv_text if csv_text is not None else io.dumps(obj)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _lambdas_for(model: PCFieldModel, args) -> list[np.ndarray]:
    if args.lambda_:
        return [wrap_angle(v) for v in parse_lambdas(args.lambda_)]
    q = model.quotient
    if q.is_finite:
        return [q.dual_to_theta(j) for j in q.torsion_coords()]
    raise ContractError("the annihilator is infinite; pass --lambda")


def _default_window(n: int, a: int, b: int) -> np.ndarray:
    return box_window(*[(a, b)] * n)


# ---------------------------------------------------------------------------
# subcommands


def cmd_lattice(args) -> int:
    K = LatticeSubgroup.from_generators(parse_generators(args.generators))
    q = K.quotient
    ann = annihilator(K)
    _, S, _ = q.smith
    report = {
        "meta": _meta(args),
        "quotient": {
            "torsion": list(q.torsion),
            "free_rank": q.free_rank,
            "invariant_factors": [int(S[i, i]) for i in range(min(S.shape))],
            "diagonal_residues": q.diagonal_residues(),
            "change_of_basis": q.change_of_basis.tolist(),
            "finite": q.is_finite,
        },
        "annihilator": ann.to_json(),
    }
    if args.format == "csv":
        if ann.is_finite:
            rows = [[i] + list(f.theta) for i, f in enumerate(ann.frequencies)]
            hdr = ["index"] + [f"theta{i + 1}" for i in range(K.n)]
        else:
            rows = [[i] + f.offset.tolist() + f.directions.ravel().tolist() for i, f in enumerate(ann.families)]
            hdr = ["family"] + [f"offset{i + 1}" for i in range(K.n)] + \
                [f"dir{j + 1}_{i + 1}" for j in range(q.free_rank) for i in range(K.n)]
        _emit(args, csv_text=io.rows_to_csv(hdr, rows, json.dumps(report["meta"], sort_keys=True)))
    else:
        _emit(args, report)
    return EXIT_OK


def cmd_synth(args) -> int:
    model = load_model(args.model)
    window = parse_window(args.window) if args.window else _default_window(model.n, 0, 7)
    real = sample_paths(model, window, args.count, args.seed)
    meta = _meta(args)
    if args.format == "npz":
        if not args.out:
            raise ContractError("--format npz needs --out")
        io.save_paths_npz(real, args.out, json.dumps(meta, sort_keys=True))
    elif args.format == "csv":
        _emit(args, csv_text=io.paths_to_csv(real, json.dumps(meta, sort_keys=True)))
    else:
        _emit(args, {"meta": meta, "realizations": io.paths_to_json(real)})
    return EXIT_OK


def cmd_cyclocov(args) -> int:
    lags = parse_window(args.window) if args.window else None
    rows = []
    if args.paths:
        if not args.generators:
            raise ContractError("estimating from paths needs --generators")
        K = LatticeSubgroup.from_generators(parse_generators(args.generators))
        real = io.load_paths(args.paths)
        if args.lambda_:
            lams = [wrap_angle(v) for v in parse_lambdas(args.lambda_)]
        elif K.quotient.is_finite:
            lams = [K.quotient.dual_to_theta(j) for j in K.quotient.torsion_coords()]
        else:
            raise ContractError("the annihilator is infinite; pass --lambda")
        lags = _default_window(K.n, 0, 0) if lags is None else lags
        for lam in lams:
            for t in lags:
                v = estimate_spectral_covariance(real, K, lam, t)
                rows.append({"lambda": lam.tolist(), "t": t.tolist(), "re": v.real, "im": v.imag})
    else:
        model = load_model(args.model)
        lags = _default_window(model.n, 0, 0) if lags is None else lags
        for lam in _lambdas_for(model, args):
            for t in lags:
                v = spectral_covariance(model, lam, t, args.truncation)
                rows.append({"lambda": lam.tolist(), "t": t.tolist(), "re": v.value.real,
                             "im": v.value.imag, "tail_bound": v.tail_bound})
    meta = _meta(args)
    if args.format == "csv":
        n = len(rows[0]["t"]) if rows else 0
        m = len(rows[0]["lambda"]) if rows else 0
        hdr = [f"lambda{i + 1}" for i in range(m)] + [f"t{i + 1}" for i in range(n)] + ["re", "im", "tail_bound"]
        out = [r["lambda"] + r["t"] + [r["re"], r["im"], r.get("tail_bound", 0.0)] for r in rows]
        _emit(args, csv_text=io.rows_to_csv(hdr, out, json.dumps(meta, sort_keys=True)))
    else:
        _emit(args, {"meta": meta, "table": rows})
    return EXIT_OK


def cmd_spectrum(args) -> int:
    model = load_model(args.model)
    window = parse_window(args.window) if args.window else _default_window(model.n, -8, 8)
    q = model.quotient
    max_lag = int(np.max(np.abs(q.free_part(q.to_quotient(window))), initial=0)) if not q.is_finite else None
    lams = _lambdas_for(model, args) if (args.lambda_ or q.is_finite) else [np.zeros(model.n)]
    gammas = []
    for lam in lams:
        g = gamma_lambda(model, lam, args.truncation, max_lag=max_lag)
        entry = {"lambda": lam.tolist(), "variation": g.variation, "atoms": len(g)}
        if q.is_finite or args.full:
            entry["measure"] = g.to_json()
        gammas.append(entry)
    so = so_spectrum(model, args.truncation, max_lag=max_lag)
    scale = model.scale(window)
    err = float(np.max(np.abs(so.kernel_matrix(window) - model.kernel_matrix(window))))
    hyper = so.hyperplane_violation()
    report = {
        "meta": _meta(args),
        "gamma": gammas,
        "so_spectrum": {
            "locations": len(so.locations),
            "variation": so.variation,
            "diagonal": so.is_diagonal(),
            "hyperplane_violation": hyper,
            "reconstruction_error": err / scale,
            "truncation_tail_sq": so.tail_sq,
        },
    }
    if q.is_finite or args.full:
        a, b, w = so.atoms()
        report["so_spectrum"]["atoms"] = [{"chi": x.tolist(), "beta": y.tolist(), "weight": io.cpair(z)}
                                          for x, y, z in zip(a, b, w)]
    _emit(args, report)
    if err > args.tol * scale or hyper > 1e-9:
        print(f"spectrum: reconstruction error {err / scale:.3e} or hyperplane violation {hyper:.3e} "
              "above tolerance", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_decompose(args) -> int:
    if args.kernel:
        try:
            data = json.loads(Path(args.kernel).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ContractError(f"cannot read kernel {args.kernel!r}: {exc}") from None
        window, kernel, K = io.kernel_from_json(data)
    elif args.model:
        model = load_model(args.model)
        window = parse_window(args.window) if args.window else _default_window(model.n, 0, 8)
        kernel, K = model, model.subgroup
    else:
        raise ContractError("decompose needs --model or --kernel")
    if args.generators:
        K = LatticeSubgroup.from_generators(parse_generators(args.generators))
    dec = decompose(kernel, window, K, min_overlap=args.min_overlap, seed=args.seed or 0)
    if args.tol is not None:
        dec.report["tolerances"] = {k: args.tol for k in dec.report["tolerances"]}
    out = {"meta": _meta(args), "model": io.model_to_json(dec.model), "report": dec.report}
    _emit(args, out)
    dec.check()
    return EXIT_OK


def cmd_figure(args) -> int:
    params = WpcParams.of(args.T, args.S)
    rows, segments = figure_data(params, args.samples)
    meta = _meta(args)
    if args.format == "json":
        b = params.bezout
        _emit(args, {"meta": meta,
                     "params": {"T": args.T, "S": args.S, "d": b.d, "T1": b.T1, "S1": b.S1, "p": b.p, "q": b.q},
                     "rows": [list(r) for r in rows], "segments": segments})
    else:
        _emit(args, csv_text=io.rows_to_csv(["k", "t", "u", "v"], rows, json.dumps(meta, sort_keys=True)))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pcfield", description="Periodically correlated fields on Z^n.")
    ap.add_argument("--version", action="version", version=f"pcfield {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, formats=("json", "csv")):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=formats, default=formats[0])

    p = sub.add_parser("lattice", help="quotient structure and annihilator of K")
    p.add_argument("--generators", required=True, help='generator rows, e.g. "12,9" or "2,0;0,3"')
    common(p)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("synth", help="complex Gaussian sample paths on a window")
    p.add_argument("--model", required=True, help="model JSON path or preset:NAME")
    p.add_argument("--window", help='e.g. "0..7,0..7" (default 0..7 per axis)')
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    common(p, ("csv", "json", "npz"))
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cyclocov", help="spectral covariance table, exact or estimated")
    p.add_argument("--model", help="model JSON path or preset:NAME")
    p.add_argument("--paths", help="realizations (csv, json or npz) to estimate from")
    p.add_argument("--generators", help="generators of K when estimating from paths")
    p.add_argument("--lambda", dest="lambda_", help='frequencies, e.g. "pi,0;0,2pi/3"')
    p.add_argument("--window", help="lags, same syntax as windows (default 0)")
    p.add_argument("--truncation", type=int, default=DEFAULT_TRUNCATION)
    common(p)
    p.set_defaults(func=cmd_cyclocov)

    p = sub.add_parser("spectrum", help="spectral measures and kernel reconstruction")
    p.add_argument("--model", required=True)
    p.add_argument("--lambda", dest="lambda_")
    p.add_argument("--window", help="reconstruction window (default -8..8 per axis)")
    p.add_argument("--truncation", type=int, default=DEFAULT_TRUNCATION)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--full", action="store_true", help="list atoms also for infinite quotients")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("decompose", help="recover (U, P) from a kernel on a window")
    p.add_argument("--model")
    p.add_argument("--kernel", help="kernel JSON with window, gram and generators")
    p.add_argument("--generators")
    p.add_argument("--window", help="window for --model (default 0..8 per axis)")
    p.add_argument("--min-overlap", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("figure", help="points of the annihilator lines for a period (T, S)")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--S", type=int, required=True)
    p.add_argument("--samples", type=int, default=360)
    common(p, ("csv", "json"))
    p.set_defaults(func=cmd_figure)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ToleranceError as exc:
        print(f"pcfield: tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except (ContractError, OverflowError) as exc:
        print(f"pcfield: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
