"""JSON module and skeleton files.

A module file looks like::

    {
      "flags": {"elementary_iso": "unknown", "no_finite_submodule": "unknown"},
      "generators": 2,
      "p": 3,
      "precision_p": 6,
      "precision_x": 32,
      "relations": [[[0,1],[0]], [[3],[0,1]]],
      "u0": 4
    }

Each relation lists one coefficient array per generator, little-endian in X.
Canonical form: sorted keys, one key per line, coefficients reduced into
[0, p^N) with trailing zeros dropped.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .harness import SelmerSkeleton
from .modules import CERTIFIED, UNKNOWN, PresentedModule
from .ring import IwasawaSeries, RingParams


class InputError(ValueError):
    """Malformed input file; ``line``/``column`` are 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 source: str | None = None):
        self.line, self.column, self.source = line, column, source
        where = source or "<input>"
        if line is not None:
            where += f":{line}:{column}"
        super().__init__(f"{where}: {message}")


def _loads(text: str, source: str | None) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(exc.msg, exc.lineno, exc.colno, source) from None


def _int(value: Any, where: str, source: str | None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"{where}: expected integer, got {json.dumps(value)}", source=source)
    return value


def _require(obj: dict, key: str, source: str | None) -> Any:
    if key not in obj:
        raise InputError(f"missing field {key!r}", source=source)
    return obj[key]


def module_from_obj(obj: Any, source: str | None = None) -> PresentedModule:
    if not isinstance(obj, dict):
        raise InputError("module file must be a JSON object", source=source)
    p = _int(_require(obj, "p", source), "p", source)
    N = _int(_require(obj, "precision_p", source), "precision_p", source)
    M = _int(_require(obj, "precision_x", source), "precision_x", source)
    u0 = obj.get("u0")
    if u0 is not None:
        u0 = _int(u0, "u0", source)
    try:
        params = RingParams(p, N, M, u0)
    except ValueError as exc:
        raise InputError(str(exc), source=source) from None
    g = _int(_require(obj, "generators", source), "generators", source)
    if g < 0:
        raise InputError("generators must be non-negative", source=source)
    rels_raw = obj.get("relations", [])
    if not isinstance(rels_raw, list):
        raise InputError("relations: expected array", source=source)
    rels = []
    for j, rel in enumerate(rels_raw):
        if not isinstance(rel, list) or len(rel) != g:
            raise InputError(f"relations[{j}]: expected {g} coefficient arrays", source=source)
        row = []
        for i, coeffs in enumerate(rel):
            if not isinstance(coeffs, list):
                raise InputError(f"relations[{j}][{i}]: expected coefficient array", source=source)
            row.append(IwasawaSeries(params, [_int(c, f"relations[{j}][{i}]", source) for c in coeffs]))
        rels.append(tuple(row))
    flags = obj.get("flags", {}) or {}
    if not isinstance(flags, dict):
        raise InputError("flags: expected object", source=source)
    nfs = flags.get("no_finite_submodule", UNKNOWN)
    eiso = flags.get("elementary_iso", UNKNOWN)
    for name, val in (("no_finite_submodule", nfs), ("elementary_iso", eiso)):
        if val not in (CERTIFIED, UNKNOWN):
            raise InputError(f"flags.{name}: expected 'certified' or 'unknown'", source=source)
    return PresentedModule(params, g, tuple(rels), nfs, eiso)


def _trimmed(f: IwasawaSeries) -> list[int]:
    c = list(f.coeffs)
    while c and c[-1] == 0:
        c.pop()
    return c


def module_to_obj(M: PresentedModule) -> dict:
    P = M.params
    return {
        "p": P.p,
        "precision_p": P.N,
        "precision_x": P.M,
        "u0": P.u0,
        "generators": M.g,
        "relations": [[_trimmed(e) for e in rel] for rel in M.relations],
        "flags": {"no_finite_submodule": M.no_finite_submodule, "elementary_iso": M.elementary_iso},
    }


def _compact(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def canonical_json(obj: dict) -> str:
    """Sorted keys, one top-level key per line, compact values, trailing newline."""
    lines = [f"  {json.dumps(k)}: {_compact(obj[k])}" for k in sorted(obj)]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def dump_module(M: PresentedModule) -> str:
    return canonical_json(module_to_obj(M))


def parse_module(text: str, source: str | None = None) -> PresentedModule:
    return module_from_obj(_loads(text, source), source)


def load_module(path: str | Path) -> PresentedModule:
    path = Path(path)
    return parse_module(_read(path), str(path))


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(exc.strerror or str(exc), source=str(path)) from None
    except UnicodeDecodeError:
        raise InputError("file is not UTF-8", source=str(path)) from None


def skeleton_from_obj(obj: Any, base: Path | None = None, source: str | None = None) -> SelmerSkeleton:
    """``module`` is either an inline module object or a path relative to ``base``."""
    if not isinstance(obj, dict):
        raise InputError("skeleton file must be a JSON object", source=source)
    label = _require(obj, "label", source)
    if not isinstance(label, str):
        raise InputError("label: expected string", source=source)
    mod = _require(obj, "module", source)
    if isinstance(mod, str):
        ref = Path(mod) if base is None else base / mod
        module = load_module(ref)
    else:
        module = module_from_obj(mod, source)
    loc = obj.get("local_lambdas", {})
    if not isinstance(loc, dict):
        raise InputError("local_lambdas: expected object", source=source)
    local = {str(k): _int(v, f"local_lambdas.{k}", source) for k, v in loc.items()}
    corank = _int(_require(obj, "expected_corank", source), "expected_corank", source)
    ck = obj.get("ck_lambda")
    if ck is not None:
        ck = _int(ck, "ck_lambda", source)
    try:
        return SelmerSkeleton(label, module, local, corank, ck)
    except ValueError as exc:
        raise InputError(str(exc), source=source) from None


def skeleton_to_obj(sk: SelmerSkeleton) -> dict:
    out = {
        "label": sk.label,
        "module": module_to_obj(sk.S_nonprimitive),
        "local_lambdas": dict(sk.local_lambdas),
        "expected_corank": sk.expected_corank,
    }
    if sk.ck_lambda is not None:
        out["ck_lambda"] = sk.ck_lambda
    return out


def dump_skeleton(sk: SelmerSkeleton) -> str:
    return canonical_json(skeleton_to_obj(sk))


def load_skeleton(path: str | Path) -> SelmerSkeleton:
    path = Path(path)
    return skeleton_from_obj(_loads(_read(path), str(path)), path.parent, str(path))
