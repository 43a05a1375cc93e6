"""Command line driver.

Every subcommand accepts ``--config PATH`` (JSON) plus flags mirroring the
config keys; a flag given on the command line wins over the config value.
Exit codes: 0 accept/pass, 2 reject/fail, 1 error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BENCH_COLUMNS, bench_one
from .corpus import load_corpus
from .errors import GateError, InstanceFormatError, SpecidemError
from .idempotent import half_plane_idempotent, sample_delta, verify_pair
from .io import (dump_matrix, from_pairs, instance_from_dict, instance_hash, load_instance,
                 load_matrix, write_csv, write_json)
from .localspec import certify
from .model import summability_gate
from .oracle import HalfPlane, riesz_oracle

EXIT_OK, EXIT_ERROR, EXIT_REJECT = 0, 1, 2

SCAN_COLUMNS = ["xi", "margin", "weighted_alpha", "weighted_beta", "eig_clearance", "verdict"]

DEFAULTS = {
    "seed": 0,
    "tol": 1e-11,
    "side": "plus",
    "threshold": 1e6,
    "floor": 1e-6,
    "cap": 1e6,
    "resolution": 1000,
    "oracle_tol": 1e-6,
    "residual_tol": 1e-8,
    "certificate_tol": 1e-6,
    "vector": "range",
    "sizes": [256],
    "R": 2,
    "dense_nodes": 4,
}


def _parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON config; flags override its keys")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, help="quadrature tolerance")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--instance", type=Path, help="instance JSON file")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _parent()
    ap = argparse.ArgumentParser(prog="specidem", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gate", parents=[parent], help="summability gate on the coefficients")
    g.add_argument("--threshold", type=float)
    g.add_argument("--require-certified", action="store_true", default=None)

    s = sub.add_parser("scan-delta", parents=[parent], help="membership scan over abscissae (CSV)")
    s.add_argument("--xi", type=float, nargs="*", help="explicit abscissae (empty allowed)")
    s.add_argument("--resolution", type=int, help="interior grid points of (a, b)")
    s.add_argument("--floor", type=float)
    s.add_argument("--cap", type=float)

    p = sub.add_parser("project", parents=[parent], help="build J_xi and write a bundle")
    p.add_argument("--xi", type=float)
    p.add_argument("--side", choices=["plus", "minus", "both"])
    p.add_argument("--dump-j", type=Path, help="binary dump of J (both: -plus/-minus suffixes)")
    p.add_argument("--oracle", action="store_true", default=None, help="compare with the dense oracle")

    v = sub.add_parser("verify", parents=[parent], help="check a bundle, or the bundled corpus")
    v.add_argument("--bundle", type=Path)
    v.add_argument("--j-file", type=Path)

    c = sub.add_parser("certify", parents=[parent], help="membership certificate for a vector")
    c.add_argument("--xi", type=float)
    c.add_argument("--side", choices=["plus", "minus"])
    c.add_argument("--vector", help="'range', 'random' or a JSON file of [re, im] pairs")

    b = sub.add_parser("bench", parents=[parent], help="structured vs dense timing (CSV)")
    b.add_argument("--sizes", type=lambda t: [int(x) for x in t.split(",") if x], help="e.g. 256,512")
    b.add_argument("--R", type=int)
    b.add_argument("--dense-nodes", help="nodes timed on the dense route, or 'all'")
    return ap


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InstanceFormatError(f"config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise InstanceFormatError("config must be a JSON object")
        cfg.update(loaded)
    for k, v in vars(args).items():
        if k not in ("config", "command") and v is not None:
            cfg[k] = v
    return cfg


def _instance(cfg):
    src = cfg.get("instance")
    if isinstance(src, (str, Path)):
        return load_instance(src)
    if isinstance(src, dict):
        return instance_from_dict(src)
    gen = cfg.get("generator")
    if isinstance(gen, dict):
        gen = {"kind": gen.get("kind"), "params": dict(gen.get("params", {}))}
        if gen["kind"] == "random":
            gen["params"].setdefault("seed", cfg["seed"])
        return instance_from_dict({"family": gen})
    raise InstanceFormatError("no instance given (use --instance or config 'instance'/'generator')")


def _emit_json(obj, cfg):
    write_json(obj, cfg.get("out"), None if cfg.get("out") else sys.stdout)


def _emit_csv(rows, columns, cfg):
    write_csv(rows, columns, cfg.get("out"), None if cfg.get("out") else sys.stdout)


def cmd_gate(cfg) -> int:
    T = _instance(cfg)
    rep = summability_gate(T.coeffs, cfg["threshold"], bool(cfg.get("require_certified")))
    _emit_json({"instance_hash": instance_hash(T), "gate": rep.to_dict()}, cfg)
    return EXIT_OK if rep.accepted else EXIT_REJECT


def cmd_scan_delta(cfg) -> int:
    T = _instance(cfg)
    xis = cfg.get("xi")
    grid = None
    if xis is not None:
        grid = np.atleast_1d(np.asarray(xis, dtype=float))
    elif isinstance(cfg.get("grid"), dict):
        gd = cfg["grid"]
        grid = np.linspace(gd["start"], gd["stop"], int(gd["num"]))
    scan = sample_delta(T, grid, int(cfg["resolution"]), cfg["floor"], cfg["cap"])
    rows = [r.to_dict() for r in scan.reports]
    _emit_csv(rows, SCAN_COLUMNS, cfg)
    if scan.reports:
        print(f"accepted fraction: {scan.fraction:.4f} ({len(scan.reports)} abscissae)", file=sys.stderr)
    return EXIT_OK


def _bundle_record(T, S, oracle_gap=None, j_file=None):
    d = S.diagnostics
    rec = {"instance_hash": instance_hash(T), "xi": S.xi, "side": S.side, "N": T.N, "R": T.R}
    for k in ("idempotency", "commutation", "invariance", "norm_J", "C_xi", "M_hat", "C_hat",
              "norm_bound", "norm_integral_part", "quad_error", "nodes", "max_core_cond", "wall_time"):
        if k in d:
            rec[k] = d[k]
    if oracle_gap is not None:
        rec["oracle_gap"] = oracle_gap
    if j_file is not None:
        rec["j_file"] = str(j_file)
        rec["j_format"] = "row-major little-endian complex128 (re, im float64 pairs)"
    return rec


def _dump_path(base: Path, side: str, both: bool) -> Path:
    if not both:
        return base
    return base.with_name(f"{base.stem}-{side}{base.suffix}")


def cmd_project(cfg) -> int:
    T = _instance(cfg)
    if cfg.get("xi") is None:
        raise SpecidemError("project needs --xi")
    xi = float(cfg["xi"][0] if isinstance(cfg["xi"], list) else cfg["xi"])
    sides = ["plus", "minus"] if cfg["side"] == "both" else [cfg["side"]]
    eigs = np.linalg.eigvals(T.dense())
    out = {"instance_hash": instance_hash(T), "xi": xi, "results": []}
    Js = {}
    for side in sides:
        S = half_plane_idempotent(T, xi, side, cfg["tol"], eigenvalues=eigs, seed=cfg["seed"])
        Js[side] = S
        gap = None
        if cfg.get("oracle"):
            gap = float(np.linalg.norm(S.J - riesz_oracle(T, HalfPlane(xi, side)), 2))
        jf = None
        if cfg.get("dump_j"):
            jf = _dump_path(Path(cfg["dump_j"]), side, len(sides) > 1)
            dump_matrix(S.J, jf)
        out["results"].append(_bundle_record(T, S, gap, jf))
    if len(sides) == 2:
        out["pair"] = verify_pair(Js["plus"], Js["minus"], T).to_dict()
    _emit_json(out, cfg)
    return EXIT_OK


def _check_J(T, J, xi, side, cfg) -> dict:
    Td = T.dense()
    nJ = np.linalg.norm(J, 2)
    nT = np.linalg.norm(Td, 2)
    res = {
        "idempotency": (float(np.linalg.norm(J @ J - J, 2)), cfg["residual_tol"] * (1 + nJ**2)),
        "commutation": (float(np.linalg.norm(J @ Td - Td @ J, 2)), cfg["residual_tol"] * nT * max(nJ, 1.0)),
        "oracle_gap": (float(np.linalg.norm(J - riesz_oracle(T, HalfPlane(xi, side)), 2)), cfg["oracle_tol"]),
    }
    return {k: {"value": v, "bound": b, "pass": bool(v <= b)} for k, (v, b) in res.items()}


def cmd_verify(cfg) -> int:
    if cfg.get("bundle"):
        bundle = json.loads(Path(cfg["bundle"]).read_text())
        T = _instance(cfg)
        results = bundle.get("results", [bundle])
        report = {"bundle": str(cfg["bundle"]), "checks": []}
        ok = True
        for rec in results:
            if rec.get("instance_hash", bundle.get("instance_hash")) != instance_hash(T):
                raise SpecidemError("instance hash does not match the bundle")
            jf = cfg.get("j_file") or rec.get("j_file")
            if not jf:
                raise SpecidemError("bundle has no J file; pass --j-file")
            jf = Path(jf)
            if not jf.is_absolute() and not jf.exists():
                jf = Path(cfg["bundle"]).parent / jf
            J = load_matrix(jf, T.N)
            xi = rec.get("xi", bundle.get("xi"))
            checks = _check_J(T, J, xi, rec["side"], cfg)
            failed = [k for k, c in checks.items() if not c["pass"]]
            ok &= not failed
            report["checks"].append({"side": rec["side"], "residuals": checks, "failed": failed})
        report["passed"] = ok
        _emit_json(report, cfg)
        for c in report["checks"]:
            for name in c["failed"]:
                print(f"FAIL {c['side']}: {name} = {c['residuals'][name]['value']:.3e}", file=sys.stderr)
        return EXIT_OK if ok else EXIT_REJECT

    rows = []
    ok = True
    for i, (T, xi, P) in enumerate(load_corpus()):
        Jp = half_plane_idempotent(T, xi, "plus", cfg["tol"], constants=False)
        Jm = half_plane_idempotent(T, xi, "minus", cfg["tol"], constants=False)
        pair = verify_pair(Jp, Jm, T)
        gap = float(np.linalg.norm(Jp.J - P, 2))
        gap_m = float(np.linalg.norm(Jm.J - (np.eye(T.N) - P), 2))
        comm = max(Jp.diagnostics["commutation"] / Jp.diagnostics["commutation_bound"],
                   Jm.diagnostics["commutation"] / Jm.diagnostics["commutation_bound"])
        passed = (gap <= cfg["oracle_tol"] and gap_m <= cfg["oracle_tol"]
                  and pair.max_residual <= cfg["residual_tol"] and comm <= 1.0)
        ok &= passed
        rows.append({"index": i, "N": T.N, "R": T.R, "xi": xi, "oracle_gap_plus": gap,
                     "oracle_gap_minus": gap_m, "pair_residual": pair.max_residual, "passed": passed})
    _emit_json({"corpus": rows, "passed": ok}, cfg)
    return EXIT_OK if ok else EXIT_REJECT


def cmd_certify(cfg) -> int:
    T = _instance(cfg)
    if cfg.get("xi") is None:
        raise SpecidemError("certify needs --xi")
    xi = float(cfg["xi"][0] if isinstance(cfg["xi"], list) else cfg["xi"])
    side = cfg["side"] if cfg["side"] in ("plus", "minus") else "plus"
    rng = np.random.default_rng(cfg["seed"])
    src = cfg["vector"]
    if src in ("range", "random"):
        y = rng.standard_normal(T.N) + 1j * rng.standard_normal(T.N)
        if src == "range":
            x = half_plane_idempotent(T, xi, side, cfg["tol"], constants=False).J @ y
        else:
            x = y / np.linalg.norm(y)
    else:
        x = from_pairs(json.loads(Path(src).read_text()), "vector")
        if x.shape != (T.N,):
            raise InstanceFormatError(f"vector has shape {x.shape}, expected ({T.N},)")
    cert = certify(T, x, xi, side, cfg["certificate_tol"])
    _emit_json({"instance_hash": instance_hash(T), "vector": src if isinstance(src, str) else "file",
                "certificate": cert.to_dict()}, cfg)
    return EXIT_OK if cert.passed else EXIT_REJECT


def cmd_bench(cfg) -> int:
    dn = cfg["dense_nodes"]
    dn = None if dn in ("all", None) else int(dn)
    sizes = cfg["sizes"] if isinstance(cfg["sizes"], list) else [int(cfg["sizes"])]
    rows = [bench_one(int(N), int(cfg["R"]), cfg["seed"], cfg["tol"], dn) for N in sizes]
    _emit_csv(rows, BENCH_COLUMNS, cfg)
    return EXIT_OK


COMMANDS = {"gate": cmd_gate, "scan-delta": cmd_scan_delta, "project": cmd_project,
            "verify": cmd_verify, "certify": cmd_certify, "bench": cmd_bench}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except GateError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_REJECT
    except (SpecidemError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
