"""JSON problem, vessel and report files.

Complex entries are ``[re, im]`` pairs written with Python's shortest
round-trip float repr, arrays are nested row-major lists, and the pairs of
``gamma`` and ``gamma_star`` are stored with 1-based indices ``j < k``.
"""

from dataclasses import dataclass, field
import hashlib
import itertools
import json
import math

import numpy as np

from .exceptions import VesselError
from .vessel import Vessel

SCHEMA_VERSION = "1"


class ParseError(VesselError):
    """Malformed input; ``where`` is the JSON path of the offending entry."""

    def __init__(self, where, message):
        super().__init__(f"{where}: {message}")
        self.where = where


def encode_array(a):
    a = np.asarray(a)
    if a.ndim == 0:
        z = complex(a)
        return [float(z.real), float(z.imag)]
    return [encode_array(x) for x in a]


def _is_pair(x):
    return (isinstance(x, list) and len(x) == 2 and
            all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x))


def decode_array(obj, where, shape=None):
    """Nested lists of ``[re, im]`` pairs (or plain reals) as a complex array."""
    def walk(x, path):
        if _is_pair(x):
            return complex(x[0], x[1])
        if isinstance(x, (int, float)) and not isinstance(x, bool):
            return complex(x)
        if isinstance(x, list):
            return [walk(v, f"{path}[{i}]") for i, v in enumerate(x)]
        raise ParseError(path, f"expected a number, [re, im] pair or list, got {type(x).__name__}")

    try:
        a = np.array(walk(obj, where), dtype=complex)
    except ValueError as exc:
        raise ParseError(where, f"ragged array ({exc})") from None
    if not np.all(np.isfinite(a)):
        raise ParseError(where, "non-finite entry")
    if shape is not None and a.shape != tuple(shape):
        raise ParseError(where, f"expected shape {tuple(shape)}, got {a.shape}")
    return a


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise ParseError(where, "expected an object")
    if key not in obj:
        raise ParseError(f"{where}.{key}", "missing")
    return obj[key]


def _int(obj, key, where, low=0):
    v = _require(obj, key, where)
    if not isinstance(v, int) or isinstance(v, bool) or v < low:
        raise ParseError(f"{where}.{key}", f"expected an integer >= {low}")
    return v


def _encode_pairs(g):
    d = g.shape[0]
    return [{"j": j + 1, "k": k + 1, "value": encode_array(g[j, k])}
            for j, k in itertools.combinations(range(d), 2)]


def _decode_pairs(items, d, m, where):
    if not isinstance(items, list):
        raise ParseError(where, "expected a list of {j, k, value}")
    out = {}
    for i, item in enumerate(items):
        p = f"{where}[{i}]"
        j, k = _int(item, "j", p, 1), _int(item, "k", p, 1)
        if not j < k <= d:
            raise ParseError(p, f"need 1 <= j < k <= {d}, got ({j}, {k})")
        out[(j - 1, k - 1)] = decode_array(_require(item, "value", p), f"{p}.value",
                                           (m, m))
    return out


def vessel_to_json(v):
    return {"dim_e": v.dim_e, "Phi": encode_array(v.Phi),
            "sigma": encode_array(v.sigma), "gamma": _encode_pairs(v.gamma),
            "gamma_star": _encode_pairs(v.gamma_star)}


def vessel_from_json(A, obj, where="$.vessel"):
    d, n = A.shape[0], A.shape[1]
    m = _int(obj, "dim_e", where)
    Phi = decode_array(_require(obj, "Phi", where), f"{where}.Phi", (m, n)) \
        if m else np.zeros((0, n), dtype=complex)
    sigma = decode_array(_require(obj, "sigma", where), f"{where}.sigma", (d, m, m)) \
        if m else np.zeros((d, 0, 0), dtype=complex)
    gamma = _decode_pairs(obj.get("gamma", []), d, m, f"{where}.gamma")
    gamma_star = _decode_pairs(obj.get("gamma_star", []), d, m, f"{where}.gamma_star")
    return Vessel.from_pairs(A, Phi, sigma, gamma, gamma_star)


@dataclass(frozen=True)
class ProblemFile:
    """Operators ``A_j`` with an optional vessel, grid and tolerance overrides."""

    A: np.ndarray
    vessel: Vessel = None
    grid: tuple = None
    tol: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.A.shape[0]

    @property
    def dim_h(self):
        return self.A.shape[1]

    def to_json(self):
        out = {"schema": "vesselkit/problem", "version": SCHEMA_VERSION,
               "d": self.d, "dim_h": self.dim_h, "A": encode_array(self.A)}
        if self.vessel is not None:
            out["vessel"] = vessel_to_json(self.vessel)
        if self.grid is not None:
            out["grid"] = {"N": int(self.grid[0]), "L": float(self.grid[1])}
        if self.tol:
            out["tol"] = {k: float(v) for k, v in sorted(self.tol.items())}
        return out

    @classmethod
    def from_json(cls, obj):
        where = "$"
        if not isinstance(obj, dict):
            raise ParseError(where, "expected an object")
        d, n = _int(obj, "d", where, 1), _int(obj, "dim_h", where, 1)
        A = decode_array(_require(obj, "A", where), "$.A", (d, n, n))
        vessel = vessel_from_json(A, obj["vessel"]) if "vessel" in obj else None
        grid = None
        if "grid" in obj:
            N = _int(obj["grid"], "N", "$.grid", 2)
            L = _require(obj["grid"], "L", "$.grid")
            if not isinstance(L, (int, float)) or not L > 0:
                raise ParseError("$.grid.L", "expected a positive number")
            grid = (N, float(L))
        tol = obj.get("tol", {})
        if not isinstance(tol, dict) or not all(
                isinstance(v, (int, float)) and v > 0 for v in tol.values()):
            raise ParseError("$.tol", "expected an object of positive numbers")
        return cls(A, vessel, grid, dict(tol))

    @classmethod
    def of_vessel(cls, v, grid=None, tol=None):
        return cls(np.array(v.A), v, grid, dict(tol or {}))


def dumps(obj):
    """Canonical text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def _clean(x):
    """JSON-safe copy: numpy scalars and arrays become Python values, and
    non-finite floats become strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def read_text(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(str(path), exc.strerror or str(exc)) from None


def load_problem(path):
    """``(problem, sha256 digest of the file)``."""
    raw = read_text(path)
    try:
        obj = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: $", f"invalid JSON ({exc})") from None
    return ProblemFile.from_json(obj), hashlib.sha256(raw).hexdigest()


def write_json(path, obj):
    text = dumps(_clean(obj))
    if path in (None, "-"):
        return text
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ParseError(str(path), exc.strerror or str(exc)) from None
    return text
