"""Instance files, result bundles and CSV output.

Complex numbers are written as ``[re, im]`` pairs.  An instance file is either
explicit::

    {"lambdas": [[re, im], ...], "alpha": [[[re, im], ...], ...], "beta": ...,
     "a": -0.9, "b": 0.9}

with ``alpha``/``beta`` given row by row (``N`` rows of ``R`` pairs), or a
generator reference ``{"family": {"kind": ..., "params": {...}}}``.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import InstanceFormatError
from .model import CoefficientFamily, SpectrumSpec, build_operator

__all__ = [
    "to_pairs",
    "from_pairs",
    "instance_to_dict",
    "instance_from_dict",
    "load_instance",
    "save_instance",
    "instance_hash",
    "write_json",
    "write_csv",
    "dump_matrix",
    "load_matrix",
    "GENERATORS",
]


def to_pairs(a):
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def from_pairs(obj, name="array"):
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"{name}: expected nested [re, im] pairs ({exc})") from None
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise InstanceFormatError(f"{name}: last axis must hold [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _generators():
    from . import generators as g

    def random(**p):
        return g.random_instance(**p)[0]

    return {
        "geometric": lambda **p: g.family_instance("geometric", **p),
        "power": lambda **p: g.family_instance("power", **p),
        "random": random,
        "clustered": g.clustered_divergent_instance,
    }


GENERATORS = ("geometric", "power", "random", "clustered")


def instance_from_dict(d: dict):
    if not isinstance(d, dict):
        raise InstanceFormatError("instance must be a JSON object")
    if "lambdas" not in d:
        fam = d.get("family")
        if not isinstance(fam, dict) or "kind" not in fam:
            raise InstanceFormatError("instance needs 'lambdas' or a 'family' with a 'kind'")
        kind = fam["kind"]
        gens = _generators()
        if kind not in gens:
            raise InstanceFormatError(f"unknown family kind {kind!r}; known: {sorted(gens)}")
        try:
            return gens[kind](**fam.get("params", {}))
        except TypeError as exc:
            raise InstanceFormatError(f"bad parameters for family {kind!r}: {exc}") from None
    for key in ("alpha", "beta"):
        if key not in d:
            raise InstanceFormatError(f"missing key {key!r}")
    lam = from_pairs(d["lambdas"], "lambdas")
    alpha = from_pairs(d["alpha"], "alpha")
    beta = from_pairs(d["beta"], "beta")
    if lam.ndim != 1:
        raise InstanceFormatError("lambdas must be a flat list of pairs")
    ext = {k: d[k] for k in ("a", "b", "a_im", "b_im") if d.get(k) is not None}
    try:
        nan = float("nan")
        spec = SpectrumSpec(lam, ext.get("a", nan), ext.get("b", nan),
                            accumulation_declared="a" in ext and "b" in ext,
                            normalized=bool(d.get("normalized", False)),
                            a_im=ext.get("a_im", nan), b_im=ext.get("b_im", nan))
        fam = d.get("family") if isinstance(d.get("family"), dict) else None
        return build_operator(spec, CoefficientFamily(alpha, beta, family=fam))
    except InstanceFormatError:
        raise
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None


def instance_to_dict(T) -> dict:
    s = T.spectrum
    out = {"lambdas": to_pairs(s.lambdas), "alpha": to_pairs(T.alpha), "beta": to_pairs(T.beta),
           "a": s.a, "b": s.b, "a_im": s.a_im, "b_im": s.b_im, "normalized": s.normalized}
    if T.coeffs.family is not None:
        out["family"] = T.coeffs.family
    return out


def load_instance(path):
    """Read an instance file; any parse or validation failure becomes :class:`InstanceFormatError`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return instance_from_dict(d)


def save_instance(T, path) -> None:
    write_json(instance_to_dict(T), path)


def instance_hash(T) -> str:
    """sha256 over shape and little-endian complex128 bytes of ``lambdas``, ``alpha``, ``beta``."""
    h = hashlib.sha256()
    h.update(f"{T.N}x{T.R}".encode())
    for arr in (T.lambdas, T.alpha, T.beta):
        h.update(np.ascontiguousarray(arr, dtype="<c16").tobytes())
    return h.hexdigest()


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex) or isinstance(o, np.complexfloating):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return to_pairs(o) if np.iscomplexobj(o) else o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(obj, path=None, fh=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_default, allow_nan=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    if fh is not None:
        fh.write(text)
    return text


def write_csv(rows: Iterable[dict], columns, path=None, fh=None) -> str:
    import io as _io

    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    if fh is not None:
        fh.write(text)
    return text


def dump_matrix(J, path) -> None:
    """Row-major little-endian ``(re, im)`` float64 pairs, no header."""
    np.ascontiguousarray(J, dtype="<c16").tofile(path)


def load_matrix(path, N: int) -> np.ndarray:
    data = np.fromfile(path, dtype="<c16")
    if data.size != N * N:
        raise InstanceFormatError(f"{path}: expected {N * N} complex entries, found {data.size}")
    return data.reshape(N, N)
