"""Command-line front end: ``condpce {fit,sobol,cond,benchmark,replay}``.

Every command that writes files also writes a run manifest recording the
resolved configuration, so ``condpce replay MANIFEST`` reproduces the outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from math import comb
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark import THREADS_ENV, BenchmarkConfig, resolve_threads, run_benchmark, write_outputs
from .conditional import DEFAULT_VARIANCE_FLOOR, conditional_sobol, decompose, sweep_grid
from .errors import (
    ConditioningError,
    DegenerateModelError,
    DomainError,
    ParameterError,
    SchemaError,
    UnderdeterminedError,
)
from .fields import Grid
from .pce_core import InputSpec, PceModel, fit_pce
from .sobol_global import sobol_indices
from .sparse_omp import OmpConfig, default_config

LOGGER = logging.getLogger("condpce")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4
EXIT_UNDERDETERMINED = 5

MANIFEST_SCHEMA_VERSION = 1
SPEC_SCHEMA_VERSION = 1
FIELD_CSV_SCHEMA_VERSION = 1


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- file formats


def read_samples(path, dim: int):
    """Sample CSV: header naming the input dimensions then ``y``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise CliError(f"cannot read samples: {exc}", EXIT_DATA) from exc
    if not rows:
        raise CliError(f"{path}: empty sample file", EXIT_DATA)
    header = [h.strip() for h in rows[0]]
    if header[-1] != "y":
        raise CliError(f"{path}: last column must be named 'y'", EXIT_DATA)
    if len(header) != dim + 1:
        raise CliError(
            f"{path}: {len(header) - 1} input columns but the input spec has {dim} dimensions", EXIT_DATA
        )
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise CliError(f"{path}: non-numeric entry ({exc})", EXIT_DATA) from exc
    if data.size == 0:
        raise CliError(f"{path}: no observations", EXIT_DATA)
    if data.ndim != 2 or data.shape[1] != dim + 1:
        raise CliError(f"{path}: ragged rows", EXIT_DATA)
    if not np.all(np.isfinite(data)):
        raise CliError(f"{path}: non-finite values", EXIT_DATA)
    return data[:, :dim], data[:, dim]


def write_samples(path, x, y, names=None) -> None:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    names = names or [f"x{i + 1}" for i in range(x.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names) + ["y"])
        for row, v in zip(x, np.asarray(y, dtype=float)):
            w.writerow([repr(float(c)) for c in row] + [repr(float(v))])


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_DATA) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})", EXIT_DATA) from exc


def read_input_spec(path) -> InputSpec:
    """``{"version": 1, "input_spec": [...]}``, the same block a model file carries."""
    doc = _load_json(path)
    version = doc.get("version") if isinstance(doc, dict) else None
    if version != SPEC_SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported input spec version {version!r}")
    if "input_spec" not in doc:
        raise SchemaError(f"{path}: missing 'input_spec'")
    return InputSpec.from_list(doc["input_spec"])


def write_input_spec(path, spec: InputSpec) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"version": SPEC_SCHEMA_VERSION, "input_spec": spec.to_list()}, fh, indent=1)
        fh.write("\n")


def read_model(path) -> PceModel:
    return PceModel.from_dict(_load_json(path))


def write_manifest(path, command: str, argv, config: dict, seed, inputs, outputs) -> None:
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "field_csv_schema_version": FIELD_CSV_SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "argv": list(argv),
        "config": config,
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    doc = _load_json(path)
    if not isinstance(doc, dict) or "command" not in doc:
        raise SchemaError(f"{path}: not a run manifest")
    if doc.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported manifest version {doc.get('schema_version')!r}")
    return doc


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False, default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise CliError(f"{what}: expected comma-separated numbers, got {text!r}", EXIT_USAGE) from exc
    if not vals:
        raise CliError(f"{what}: no values given", EXIT_USAGE)
    return vals


def _parse_dims(text: str, dim: int) -> tuple[int, ...]:
    try:
        dims = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise CliError(f"--cond-dims: expected 1-based integers, got {text!r}", EXIT_USAGE) from exc
    if any(d < 1 or d > dim for d in dims):
        raise CliError(f"--cond-dims: ids must lie in 1..{dim}", EXIT_USAGE)
    if len(set(dims)) != len(dims):
        raise CliError("--cond-dims: repeated dimension", EXIT_USAGE)
    return tuple(d - 1 for d in dims)


# ---------------------------------------------------------------- commands


def cmd_fit(args, argv) -> int:
    spec = read_input_spec(args.spec)
    x, y = read_samples(args.samples, spec.dim)
    omp_cfg = None
    if args.method == "omp":
        if args.omp_max_terms is not None:
            omp_cfg = OmpConfig(args.omp_max_terms, args.omp_tol)
        else:
            omp_cfg = default_config(len(y), comb(spec.dim + args.degree, args.degree), tol=args.omp_tol)
    model, rel = fit_pce(spec, x, y, args.degree, method=args.method, omp_config=omp_cfg)
    out = Path(args.output)
    out.write_text(model.to_json() + "\n", encoding="utf-8")
    config = {
        "degree": args.degree,
        "method": args.method,
        "omp_max_terms": omp_cfg.max_terms if omp_cfg else None,
        "omp_tol": args.omp_tol,
        "n_samples": int(len(y)),
        "n_terms": len(model),
    }
    manifest = Path(str(out) + ".manifest.json")
    write_manifest(manifest, "fit", argv, config, None, [args.samples, args.spec], [out])
    print(f"relative residual: {rel:.6e}")
    return EXIT_OK


def cmd_sobol(args, argv) -> int:
    model = read_model(args.model)
    report = sobol_indices(model, max_order=args.max_order)
    print(_dump(report.to_dict()))
    return EXIT_OK


def _grid_axes(model: PceModel, cond_dims, n: int, bounds: str | None) -> Grid:
    if n < 1:
        raise CliError("--grid must be >= 1", EXIT_USAGE)
    if bounds is not None:
        pairs = bounds.split(",")
        if len(pairs) != len(cond_dims):
            raise CliError("--bounds needs one lo:hi pair per conditioning dimension", EXIT_USAGE)
        lims = []
        for p in pairs:
            try:
                lo, hi = (float(t) for t in p.split(":"))
            except ValueError as exc:
                raise CliError(f"--bounds: malformed pair {p!r}", EXIT_USAGE) from exc
            lims.append((lo, hi))
    else:
        lims = []
        for d in cond_dims:
            m = model.input_spec[d]
            if m.kind != "uniform":
                raise CliError(
                    f"dimension {d + 1} is {m.kind}: give --bounds for unbounded conditioning variables",
                    EXIT_USAGE,
                )
            lims.append(tuple(m.params))
    return Grid(tuple(np.linspace(lo, hi, n) for lo, hi in lims))


def cmd_cond(args, argv) -> int:
    model = read_model(args.model)
    cond_dims = _parse_dims(args.cond_dims, model.dim)
    decomp = decompose(model, cond_dims)
    if args.at is not None:
        s = _parse_floats(args.at, "--at")
        if len(s) != len(cond_dims):
            raise CliError(f"--at needs {len(cond_dims)} values", EXIT_USAGE)
        res = conditional_sobol(decomp, s, args.variance_floor, args.max_order)
        doc = {"at": s, "cond_dims": [d + 1 for d in cond_dims]}
        doc.update(res.to_dict())
        print(_dump(doc))
        return EXIT_OK
    grid = _grid_axes(model, cond_dims, args.grid, args.bounds)
    fields = sweep_grid(decomp, grid, args.variance_floor, args.max_order)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, f in fields.items():
        f.write_csv(out / f"{name}.csv")
        written.append(out / f"{name}.csv")
    config = {
        "cond_dims": [d + 1 for d in cond_dims],
        "grid": args.grid,
        "bounds": [[float(a[0]), float(a[-1])] for a in grid.axes],
        "variance_floor": args.variance_floor,
        "max_order": args.max_order,
    }
    write_manifest(out / "manifest.json", "cond", argv, config, None, [args.model], written)
    print(f"wrote {len(written)} fields on a {'x'.join(map(str, grid.shape))} grid to {out}")
    return EXIT_OK


_BENCH_FLAGS = {
    "grid_n": int,
    "n_samples": int,
    "joint_degree": int,
    "pointwise_degree": int,
    "noise_sigma": float,
    "noise_kernel_width": float,
    "seed": int,
    "data_layout": str,
    "joint_method": str,
    "omp_max_terms": int,
    "omp_tol": float,
    "mc_sampler": str,
    "variance_floor": float,
}


def resolve_benchmark_config(args) -> BenchmarkConfig:
    base = {}
    if args.config is not None:
        doc = _load_json(args.config)
        if isinstance(doc, dict) and "command" in doc:
            doc = read_manifest(args.config)["config"]
        if not isinstance(doc, dict):
            raise SchemaError(f"{args.config}: benchmark config must be a JSON object")
        base.update(doc)
    for key in _BENCH_FLAGS:
        v = getattr(args, key)
        if v is not None:
            base[key] = v
    if args.no_noise:
        base["noise_enabled"] = False
    return BenchmarkConfig.from_dict(base)


def cmd_benchmark(args, argv) -> int:
    config = resolve_benchmark_config(args)
    threads = resolve_threads(args.threads)
    result = run_benchmark(config, threads=threads)
    out = Path(args.output)
    names = write_outputs(result, out)
    inputs = [args.config] if args.config else []
    write_manifest(out / "manifest.json", "benchmark", argv, config.to_dict(), config.seed, inputs,
                   [out / n for n in names])
    print(_dump(result.summary))
    return EXIT_OK


def cmd_replay(args, argv) -> int:
    doc = read_manifest(args.manifest)
    if doc["command"] == "benchmark":
        # re-resolve from the recorded config so edits to defaults cannot leak in
        replay = ["benchmark", "--config", str(args.manifest)]
        out = _argv_value(doc["argv"], ("-o", "--output"))
        if out is not None:
            replay += ["-o", out]
        return main(replay)
    return main(list(doc["argv"]))


def _argv_value(argv, flags):
    for i, a in enumerate(argv):
        if a in flags and i + 1 < len(argv):
            return argv[i + 1]
        for f in flags:
            if f.startswith("--") and a.startswith(f + "="):
                return a.split("=", 1)[1]
    return None


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="condpce",
        description="Polynomial chaos surrogates and conditional Sobol' sensitivity fields.",
        epilog=f"Exit codes: 0 ok, 2 usage, 3 data/schema, 4 numerical, 5 under-determined. "
        f"{THREADS_ENV} sets the default worker count.",
    )
    p.add_argument("--version", action="version", version=f"condpce {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a total-degree expansion to samples")
    f.add_argument("samples", help="CSV with one column per input dimension then 'y'")
    f.add_argument("spec", help='JSON {"version": 1, "input_spec": [...]}')
    f.add_argument("--degree", "-p", type=int, required=True, help="total degree p")
    f.add_argument("--method", choices=("ols", "omp"), default="ols")
    f.add_argument("--omp-max-terms", type=int, default=None, help="default: min(P, N // 2)")
    f.add_argument("--omp-tol", type=float, default=1e-6, help="relative residual stopping tolerance")
    f.add_argument("-o", "--output", default="model.json")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("sobol", help="global Sobol' indices of a model as JSON")
    s.add_argument("model")
    s.add_argument("--max-order", type=int, default=2, help="highest interaction order reported")
    s.set_defaults(func=cmd_sobol)

    c = sub.add_parser("cond", help="conditional moments and Sobol' indices")
    c.add_argument("model")
    c.add_argument("--cond-dims", required=True, help="1-based conditioning dimension ids, e.g. 1,2")
    where = c.add_mutually_exclusive_group(required=True)
    where.add_argument("--at", help="one conditioning point, e.g. 0.5,0.5 (JSON to stdout)")
    where.add_argument("--grid", type=int, help="n points per conditioning axis (CSV fields)")
    c.add_argument(
        "--bounds",
        help="lo:hi per conditioning axis, comma-separated; write --bounds=-2:2 when lo is negative. "
        "Defaults to the uniform supports",
    )
    c.add_argument("--variance-floor", type=float, default=DEFAULT_VARIANCE_FLOOR)
    c.add_argument("--max-order", type=int, default=2)
    c.add_argument("-o", "--output", default="cond_fields", help="output directory for --grid")
    c.set_defaults(func=cmd_cond)

    b = sub.add_parser("benchmark", help="run the three-method comparison on the synthetic field")
    b.add_argument("--config", help="benchmark config JSON or a manifest from a previous run")
    for key, typ in _BENCH_FLAGS.items():
        b.add_argument("--" + key.replace("_", "-"), type=typ, default=None, dest=key)
    b.add_argument("--no-noise", action="store_true", help="disable the additive noise")
    b.add_argument("--threads", type=int, default=None, help=f"worker cap (default ${THREADS_ENV} or 1)")
    b.add_argument("-o", "--output", default="benchmark_out")
    b.set_defaults(func=cmd_benchmark)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args, argv)
    except CliError as exc:
        return _fail(str(exc), exc.code)
    except UnderdeterminedError as exc:
        return _fail(f"under-determined system: {exc}", EXIT_UNDERDETERMINED)
    except (ConditioningError, DegenerateModelError) as exc:
        return _fail(f"numerical error: {exc}", EXIT_NUMERICAL)
    except (SchemaError, DomainError) as exc:
        return _fail(f"data error: {exc}", EXIT_DATA)
    except (ParameterError, IndexError) as exc:
        return _fail(f"invalid argument: {exc}", EXIT_USAGE)
    except OSError as exc:
        return _fail(f"i/o error: {exc}", EXIT_DATA)


def _fail(message: str, code: int) -> int:
    print(f"condpce: error: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
