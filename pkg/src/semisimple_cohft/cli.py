"""Batch command line: config ingestion, run orchestration, deterministic artifacts.

Usage::

    semisimple-cohft <command> [--config run.json] [--out DIR] [--set key.path=value ...]
    semisimple-cohft --dump-schema

Commands: ``tft``, ``nodal``, ``oracle``, ``build``, ``deform``, ``rmatrix``,
``reconstruct``, ``check``.  Every run writes ``result.json`` (plus
``table.json`` where a correlator table is produced) and ``manifest.json``
into the output directory, each via a temporary file and an atomic rename.

Exit codes:
  0  success
  2  the configuration violates the schema
  3  a mathematical precondition or invariant failed (machine-readable
     record in ``error.json``)
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import random
import sys
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .core_algebra import Backend, EndSeries, backend_from_spec
from .correlator_engine import (
    CorrelatorTable,
    build_cohft,
    quantum_product,
    required_series_order,
    string_dilaton_check,
    table_from_json,
    u_deform,
)
from .frobenius import (
    FrobeniusAlgebra,
    NotSemisimpleError,
    diagonal_algebra,
    idempotent_decomposition,
    quantum_p1,
    quantum_p2,
    rank_one,
    validate,
)
from .moduli_oracle import kappa_to_psi, wk_query, wk_table
from .nodal_series import (
    B_from_ED,
    C_from_ED,
    NotSymplecticError,
    W_from_E,
    check_symplectic,
    consistency_4way,
    random_symplectic,
    zeta_from_E,
)
from .reconstruction import (
    EulerData,
    EulerDataError,
    check_homogeneity,
    quantum_p1_euler_data,
    recursion_residual,
    reconstruct_gw,
    solve_rmatrix,
    validate_euler_data,
)
from .tft_closed import SurfaceSignature, decomposition_propagator, propagator, s_diagram

SCHEMA_VERSION = 1
COMMANDS = ("tft", "nodal", "oracle", "build", "deform", "rmatrix", "reconstruct", "check")
EXIT_OK, EXIT_SCHEMA, EXIT_PRECONDITION = 0, 2, 3

CONFIG_SCHEMA: dict = {
    "schema_version": {"type": "int", "required": True, "doc": f"must equal {SCHEMA_VERSION}"},
    "command": {"type": "str", "doc": "default command when none is given on the command line"},
    "seed": {"type": "int", "doc": "seed for random data (recorded in the manifest)"},
    "backend": {
        "type": "dict",
        "doc": '{"kind": "rational"} or {"kind": "complex", "precision_bits": 256, "tolerance": 1e-40}',
    },
    "algebra": {
        "type": "dict",
        "doc": '{"catalog": name, "params": {...}} | {"inline": {dim, mult_table, pairing, unit}} | {"file": path}; '
        "catalog names: rank_one(theta), diagonal(thetas), quantum_p1(q), quantum_p2(q)",
    },
    "euler": {"type": "dict", "doc": '{"xi0": [...], "mu": [[...]], "d": x} or {"catalog": "quantum_p1"}'},
    "bounds": {
        "type": "dict",
        "doc": '{"max_genus": G, "max_points": N, "series_order": K, "u_order": k, "max_dim": D}',
    },
    "E": {"type": "dict", "doc": '{"coefficients": [[[...]]]} or {"random_symplectic": {"order": K}}'},
    "hodge": {"type": "list", "doc": "odd Hodge-twist coefficients [h1, h3, ...]"},
    "u": {"type": "list", "doc": "deformation point in the user basis"},
    "table": {"type": "str", "doc": "path of a correlator table (check, deform)"},
    "oracle": {"type": "dict", "doc": '{"queries": [[g, [a...]]], "kappa": [[g, [j...], [a...]]]}'},
    "tft": {"type": "dict", "doc": '{"max_genus": g, "max_boundary": m+n}'},
    "output": {"type": "str", "doc": "output directory (overridden by --out)"},
}

TABLE_SCHEMA: dict = {
    "header": {
        "format": '"correlator-table"',
        "version": 1,
        "bounds": {"max_genus": "int", "max_points": "int"},
        "dim": "int",
        "frame_hash": "sha256 prefix of the algebra",
        "backend": "backend description",
        "algebra": "{dim, basis_names, mult_table, pairing, unit}",
    },
    "metadata": "free-form provenance of the construction",
    "entries": "rows [g, n, [[basis index, psi exponent], ...], value], canonically sorted",
}

_TYPES = {"int": int, "str": str, "dict": dict, "list": list}


class SchemaError(ValueError):
    """The configuration does not follow :data:`CONFIG_SCHEMA`."""


@dataclass
class PreconditionFailure(Exception):
    """A mathematical precondition or invariant failed."""

    invariant: str
    message: str

    def __str__(self) -> str:
        return f"{self.invariant}: {self.message}"


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def validate_config(cfg: dict) -> None:
    if not isinstance(cfg, dict):
        raise SchemaError("configuration must be a JSON object")
    unknown = sorted(set(cfg) - set(CONFIG_SCHEMA))
    if unknown:
        raise SchemaError(f"unknown configuration keys: {unknown}")
    for key, rule in CONFIG_SCHEMA.items():
        if key not in cfg:
            if rule.get("required"):
                raise SchemaError(f"missing required key {key!r}")
            continue
        expected = _TYPES[rule["type"]]
        value = cfg[key]
        if not isinstance(value, expected) or (expected is int and isinstance(value, bool)):
            raise SchemaError(f"{key!r} must be of type {rule['type']}")
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(f"schema_version {cfg['schema_version']} is not supported (expected {SCHEMA_VERSION})")
    if "command" in cfg and cfg["command"] not in COMMANDS:
        raise SchemaError(f"unknown command {cfg['command']!r}")
    for name, val in cfg.get("bounds", {}).items():
        if not isinstance(val, int) or isinstance(val, bool) or val < 0:
            raise SchemaError(f"bounds.{name} must be a non-negative integer")
    alg = cfg.get("algebra")
    if alg is not None and len(set(alg) & {"catalog", "inline", "file"}) != 1:
        raise SchemaError("algebra needs exactly one of 'catalog', 'inline', 'file'")


def apply_override(cfg: dict, assignment: str) -> None:
    """``a.b.c=value`` with ``value`` parsed as JSON (falling back to a string)."""
    if "=" not in assignment:
        raise SchemaError(f"override {assignment!r} is not of the form key=value")
    path, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = path.split(".")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise SchemaError(f"cannot override inside non-object {path!r}")
    node[keys[-1]] = value


def load_config(path: str | None, overrides: list[str]) -> dict:
    cfg: dict = {"schema_version": SCHEMA_VERSION}
    if path:
        try:
            cfg = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read configuration {path}: {exc}") from exc
    for o in overrides:
        apply_override(cfg, o)
    validate_config(cfg)
    return cfg


def _backend(cfg: dict) -> Backend:
    try:
        return backend_from_spec(cfg.get("backend"))
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc)) from exc


def _algebra(cfg: dict, bk: Backend) -> FrobeniusAlgebra:
    spec = cfg.get("algebra") or {"catalog": "rank_one"}
    try:
        if "inline" in spec:
            return FrobeniusAlgebra.from_json(spec["inline"], bk)
        if "file" in spec:
            return FrobeniusAlgebra.from_json(json.loads(Path(spec["file"]).read_text()), bk)
        params = spec.get("params", {})
        name = spec["catalog"]
        if name == "rank_one":
            return rank_one(_scalar(params.get("theta", 1)), bk)
        if name == "diagonal":
            return diagonal_algebra([_scalar(t) for t in params["thetas"]], bk)
        if name == "quantum_p1":
            return quantum_p1(_scalar(params.get("q", 1)), bk)
        if name == "quantum_p2":
            return quantum_p2(_scalar(params.get("q", 1)), bk)
    except (KeyError, OSError, json.JSONDecodeError, TypeError) as exc:
        raise SchemaError(f"bad algebra specification: {exc}") from exc
    raise SchemaError(f"unknown catalog algebra {spec.get('catalog')!r}")


def _scalar(x: Any) -> Any:
    return Fraction(x) if isinstance(x, str) else x


def _frame(A: FrobeniusAlgebra, seed: int, normalize: bool = True):
    report = validate(A)
    if not report.ok:
        raise PreconditionFailure("frobenius_axioms", "; ".join(report.violations))
    try:
        return idempotent_decomposition(A, seed=seed, normalize=normalize)
    except NotSemisimpleError as exc:
        raise PreconditionFailure("semisimple", str(exc)) from exc


def _euler(cfg: dict, bk: Backend) -> EulerData:
    spec = cfg.get("euler")
    if spec is None:
        raise SchemaError("this command needs 'euler' data")
    if spec.get("catalog") == "quantum_p1":
        return quantum_p1_euler_data(bk)
    try:
        return EulerData.from_json(spec, bk)
    except EulerDataError as exc:
        raise SchemaError(str(exc)) from exc


def _bounds(cfg: dict, **defaults: int) -> dict:
    b = dict(defaults)
    b.update(cfg.get("bounds", {}))
    return b


def _E(cfg: dict, frame, bk: Backend, seed: int, default_order: int) -> EndSeries:
    spec = cfg.get("E") or {"random_symplectic": {"order": default_order}}
    if "coefficients" in spec:
        return EndSeries.from_json(spec["coefficients"], bk)
    if "random_symplectic" in spec:
        order = int(spec["random_symplectic"].get("order", default_order))
        return random_symplectic(frame, order, random.Random(seed))
    raise SchemaError("E needs 'coefficients' or 'random_symplectic'")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_tft(cfg: dict, bk: Backend, seed: int) -> dict:
    A = _algebra(cfg, bk)
    frame = _frame(A, seed, normalize=False)
    opts = {"max_genus": 2, "max_boundary": 3}
    opts.update(cfg.get("tft", {}))
    rows = []
    for g in range(opts["max_genus"] + 1):
        for total in range(opts["max_boundary"] + 1):
            for m in range(total + 1):
                sig = SurfaceSignature(g, m, total - m)
                p = propagator(frame, sig)
                ok = p.equals(decomposition_propagator(A, sig))
                rows.append({"genus": g, "inputs": m, "outputs": total - m, "matches_sewing": ok, "closed_ansatz": bool(p.metadata)})
    s_ok = s_diagram(frame).equals(propagator(frame, SurfaceSignature(0, 1, 1)))
    if not all(r["matches_sewing"] for r in rows) or not s_ok:
        raise PreconditionFailure("sewing", "propagators disagree with the elementary decomposition")
    return {"signatures": rows, "s_diagram": s_ok, "frame": frame.describe()}


def cmd_nodal(cfg: dict, bk: Backend, seed: int) -> dict:
    frame = _frame(_algebra(cfg, bk), seed, normalize=False)
    E = _E(cfg, frame, frame.backend, seed, 6)
    if not check_symplectic(frame, E):
        raise PreconditionFailure("symplectic", "E(z)E*(−z) ≠ Id")
    B = B_from_ED(frame, E)
    C = C_from_ED(frame, E)
    chain = consistency_4way(frame, E, B, C)
    if not chain.ok:
        raise PreconditionFailure("four_way_chain", json.dumps(chain.agreements))
    W = W_from_E(frame, E)
    zd = zeta_from_E(frame, E)
    enc = frame.backend.to_json
    return {
        "E": E.to_json(),
        "chain": chain.agreements,
        "B_is_identity": B.is_identity(),
        "C_is_identity": C.is_identity(),
        "W": [[[[enc(x) for x in row] for row in W.coeffs[p, q]] for q in range(W.order + 1 - p)] for p in range(W.order + 1)],
        **zd.to_json(),
    }


def cmd_oracle(cfg: dict, bk: Backend, seed: int) -> dict:
    b = _bounds(cfg, max_dim=6)
    table = wk_table(b["max_dim"])
    rows = [[g, list(a), f"{v.numerator}/{v.denominator}"] for (g, a), v in sorted(table.items())]
    opts = cfg.get("oracle", {})
    queries = []
    for g, exps in opts.get("queries", []):
        r = wk_query(int(g), exps)
        queries.append([g, exps, str(r.value), r.status])
    kappas = []
    for g, ks, ps in opts.get("kappa", []):
        try:
            kappas.append([g, ks, ps, str(kappa_to_psi(int(g), ks, ps))])
        except ValueError as exc:
            raise PreconditionFailure("kappa_dimension", str(exc)) from exc
    return {"max_dim": b["max_dim"], "table": rows, "queries": queries, "kappa": kappas}


def _table_result(table: CorrelatorTable, extra: dict) -> tuple[dict, CorrelatorTable]:
    return extra, table


def cmd_build(cfg: dict, bk: Backend, seed: int):
    frame = _frame(_algebra(cfg, bk), seed)
    b = _bounds(cfg, max_genus=1, max_points=3)
    order = b.get("series_order", required_series_order(b["max_genus"], b["max_points"]))
    E = _E(cfg, frame, frame.backend, seed, order).convert(frame.backend)
    if E.order < required_series_order(b["max_genus"], b["max_points"]):
        raise PreconditionFailure("series_order", f"E has order {E.order}, the bounds need {required_series_order(b['max_genus'], b['max_points'])}")
    if not check_symplectic(frame, E):
        raise PreconditionFailure("symplectic", "E(z)E*(−z) ≠ Id")
    T = build_cohft(frame, E)
    table = CorrelatorTable.from_theory(T, b["max_genus"], b["max_points"])
    table.metadata["E"] = E.to_json()
    rep = string_dilaton_check(table)
    if not rep.ok:
        raise PreconditionFailure("flat_identity", json.dumps(rep.to_json()))
    return _table_result(table, {"entries": len(table.entries), "string_dilaton": rep.to_json()})


def _theory_from_cfg(cfg: dict, bk: Backend, seed: int, extra_points: int = 0):
    if "table" in cfg:
        table = _read_table(cfg["table"], bk if "backend" in cfg else None)
        return table.as_theory(), table
    frame = _frame(_algebra(cfg, bk), seed)
    b = _bounds(cfg, max_genus=0, max_points=3)
    # the u-deformation reads entries with up to ``extra_points`` additional insertions
    order = b.get("series_order", required_series_order(b["max_genus"], b["max_points"] + extra_points))
    E = _E(cfg, frame, frame.backend, seed, order).convert(frame.backend)
    if not check_symplectic(frame, E):
        raise PreconditionFailure("symplectic", "E(z)E*(−z) ≠ Id")
    return build_cohft(frame, E), None


def cmd_deform(cfg: dict, bk: Backend, seed: int) -> dict:
    b = _bounds(cfg, u_order=3)
    T, _ = _theory_from_cfg(cfg, bk, seed, extra_points=b["u_order"])
    tbk = T.backend
    u = [tbk.from_json(x) for x in cfg.get("u", [0] * T.dim)]
    if len(u) != T.dim:
        raise SchemaError(f"u has {len(u)} entries, the algebra has dimension {T.dim}")
    qp = quantum_product(T, u, b["u_order"])
    if not qp.associative:
        raise PreconditionFailure("associativity", f"defects per order {qp.associativity_defect}")
    D = u_deform(T, u, b["u_order"])
    n = T.dim
    three = []
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                three.append([[i, j, k], tbk.to_json(D.value(0, ((i, 0), (j, 0), (k, 0))))])
    enc = tbk.to_json
    return {
        "u": [enc(x) for x in u],
        "u_order": b["u_order"],
        "product_orders": [[[[enc(x) for x in c[i, j, :]] for j in range(n)] for i in range(n)] for c in qp.orders],
        "associativity_defect": qp.associativity_defect,
        "genus0_three_point": three,
    }


def cmd_rmatrix(cfg: dict, bk: Backend, seed: int) -> dict:
    frame = _frame(_algebra(cfg, bk), seed).require_normalized()
    data = _euler(cfg, frame.backend)
    problems = validate_euler_data(frame.algebra, data.with_backend(frame.backend))
    if problems:
        raise PreconditionFailure("euler_data", "; ".join(problems))
    b = _bounds(cfg, series_order=6)
    E = solve_rmatrix(frame, data, b["series_order"])
    return {
        "series_order": b["series_order"],
        "E": E.to_json(),
        "recursion_residual": recursion_residual(frame, data, E),
        "symplectic": check_symplectic(frame, E),
    }


def cmd_reconstruct(cfg: dict, bk: Backend, seed: int):
    frame = _frame(_algebra(cfg, bk), seed).require_normalized()
    data = _euler(cfg, frame.backend)
    b = _bounds(cfg, max_genus=1, max_points=3)
    hodge = cfg.get("hodge")
    try:
        table = reconstruct_gw(frame, data, b["max_genus"], b["max_points"], h=hodge)
    except EulerDataError as exc:
        raise PreconditionFailure("euler_data", str(exc)) from exc
    return _table_result(table, {"entries": len(table.entries), "hodge": hodge})


def cmd_check(cfg: dict, bk: Backend, seed: int) -> dict:
    if "table" not in cfg:
        raise SchemaError("check needs 'table'")
    table = _read_table(cfg["table"], bk if "backend" in cfg else None)
    rep = string_dilaton_check(table)
    out: dict = {"string_dilaton": rep.to_json()}
    if rep.string_failures:
        raise PreconditionFailure("string_equation", json.dumps(rep.to_json()))
    if rep.dilaton_failures:
        raise PreconditionFailure("dilaton_equation", json.dumps(rep.to_json()))
    if "euler" in cfg and table.max_points >= 2:
        data = _euler(cfg, table.backend)
        hr = check_homogeneity(table.as_theory(), data, table.max_genus, table.max_points - 1)
        out["homogeneity"] = hr.to_json()
        if not hr.ok:
            raise PreconditionFailure("homogeneity", json.dumps(hr.to_json()))
    return out


def _read_table(path: str, bk: Backend | None) -> CorrelatorTable:
    try:
        data = json.loads(Path(path).read_text())
        return table_from_json(data, bk)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"cannot read table {path}: {exc}") from exc


HANDLERS: dict[str, Callable] = {
    "tft": cmd_tft,
    "nodal": cmd_nodal,
    "oracle": cmd_oracle,
    "build": cmd_build,
    "deform": cmd_deform,
    "rmatrix": cmd_rmatrix,
    "reconstruct": cmd_reconstruct,
    "check": cmd_check,
}


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False, default=_default) + "\n"


def _default(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if hasattr(obj, "item"):
        return obj.item()
    return str(obj)


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _versions() -> dict:
    import mpmath
    import numpy
    import sympy

    return {
        "artifact": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "mpmath": mpmath.__version__,
        "sympy": sympy.__version__,
    }


def manifest_hash(manifest: dict) -> str:
    """Hash of the manifest without its timing block and without the hash itself."""
    core = {k: v for k, v in manifest.items() if k not in ("timing", "manifest_hash")}
    return _sha(_dumps(core))


def run(command: str, cfg: dict, out_dir: Path) -> int:
    """Execute ``command``; returns the exit status and writes all artifacts."""
    started = time.perf_counter()
    seed = int(cfg.get("seed", 0))
    bk = _backend(cfg)
    outputs: dict[str, str] = {}
    result = HANDLERS[command](cfg, bk, seed)
    files: dict[str, str] = {}
    if isinstance(result, tuple):
        result, table = result
        files["table.json"] = _dumps(table.to_json())
    files["result.json"] = _dumps({"command": command, "result": result})
    for name, text in sorted(files.items()):
        atomic_write(out_dir / name, text)
        outputs[name] = _sha(text)
    inputs = {"config": _sha(_dumps(cfg))}
    if "table" in cfg:
        try:
            inputs["table"] = _sha(Path(cfg["table"]).read_text())
        except OSError:
            pass
    manifest = {
        "command": command,
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "inputs": inputs,
        "versions": _versions(),
        "outputs": outputs,
        "timing": {"seconds": round(time.perf_counter() - started, 6)},
    }
    manifest["manifest_hash"] = manifest_hash(manifest)
    atomic_write(out_dir / "manifest.json", _dumps(manifest))
    return EXIT_OK


def _error(out_dir: Path | None, kind: str, invariant: str, message: str, code: int) -> int:
    record = {"error": {"kind": kind, "invariant": invariant, "message": message, "exit_code": code}}
    text = _dumps(record)
    sys.stderr.write(text)
    if out_dir is not None:
        try:
            atomic_write(out_dir / "error.json", text)
        except OSError:
            pass
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="semisimple-cohft",
        description="Semi-simple cohomological field theories: build, deform, reconstruct and check correlator tables.",
    )
    p.add_argument("command", nargs="?", choices=COMMANDS, help="what to run (or 'command' in the config)")
    p.add_argument("--config", "-c", help="JSON run configuration")
    p.add_argument("--out", "-o", help="output directory (default: config 'output' or ./out)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a config entry (dotted path, JSON value)")
    p.add_argument("--seed", type=int, help="override the run seed")
    p.add_argument("--backend", choices=("rational", "complex"), help="override the scalar backend")
    p.add_argument("--dump-schema", action="store_true", help="print the config and table schemas and exit")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.dump_schema:
        sys.stdout.write(_dumps({"schema_version": SCHEMA_VERSION, "config": CONFIG_SCHEMA, "table": TABLE_SCHEMA}))
        return EXIT_OK
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.backend is not None:
        overrides.append(f'backend={{"kind": "{args.backend}"}}')
    out_dir: Path | None = None
    try:
        cfg = load_config(args.config, overrides)
        command = args.command or cfg.get("command")
        if command is None:
            raise SchemaError("no command given")
        out_dir = Path(args.out or cfg.get("output") or "out")
        return run(command, cfg, out_dir)
    except SchemaError as exc:
        return _error(out_dir, "schema", "config", str(exc), EXIT_SCHEMA)
    except PreconditionFailure as exc:
        return _error(out_dir, "precondition", exc.invariant, exc.message, EXIT_PRECONDITION)
    except (NotSymplecticError, EulerDataError, NotSemisimpleError, ArithmeticError, ValueError) as exc:
        return _error(out_dir, "precondition", type(exc).__name__, str(exc), EXIT_PRECONDITION)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
