"""JSON encodings for matrices, symbols and reports.

Matrices are {"real": rows, "imag": rows} (imag optional).  Symbols carry a
"kind" (polynomial, rational, expression) and an optional "certificate".
"""
from __future__ import annotations

import json
import math

import numpy as np

from .errors import PreconditionError
from .symbols import DecayCertificate, ExpressionSymbol, PolynomialSymbol, RationalSymbol, Symbol


def matrix_to_json(M):
    M = np.asarray(M)
    out = {"real": np.real(M).tolist()}
    if np.iscomplexobj(M) and np.any(np.imag(M) != 0):
        out["imag"] = np.imag(M).tolist()
    return out


def matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, list):
        return np.asarray(obj, dtype=float)
    if "real" not in obj:
        raise PreconditionError("matrix JSON needs a 'real' field")
    re = np.asarray(obj["real"], dtype=float)
    if "imag" in obj:
        return re + 1j * np.asarray(obj["imag"], dtype=float)
    return re


def matrices_from_json(obj) -> list:
    """A list of matrices, or {"ops": [...]}, or a single matrix."""
    if isinstance(obj, dict) and "ops" in obj:
        obj = obj["ops"]
    if isinstance(obj, dict):
        return [matrix_from_json(obj)]
    if obj and (isinstance(obj[0], dict) or np.ndim(obj[0]) == 2):
        return [matrix_from_json(m) for m in obj]
    return [matrix_from_json(obj)]


def _complex(v):
    return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)


def certificate_from_json(obj):
    if obj is None:
        return None
    return DecayCertificate(float(obj["c"]), float(obj["s"]), obj["flavor"], obj.get("angle"))


def symbol_to_json(sym: Symbol):
    if not hasattr(sym, "to_json"):
        raise PreconditionError(f"symbol {sym!r} has no JSON form")
    out = sym.to_json()
    if sym.certificate is not None:
        out["certificate"] = sym.certificate.to_json()
    return out


def symbol_from_json(obj) -> Symbol:
    kind = obj.get("kind")
    cert = certificate_from_json(obj.get("certificate"))
    if kind == "polynomial":
        if "terms" in obj:
            terms = {tuple(k): _complex(v) for k, v in obj["terms"]}
            return PolynomialSymbol.from_terms(terms, int(obj["arity"]), cert)
        c = np.array([_complex(v) for v in obj["coeffs"]]).reshape(obj["shape"])
        return PolynomialSymbol(c, cert)
    if kind == "rational":
        num = symbol_from_json(obj["num"])
        den = symbol_from_json(obj["den"])
        poles = [[_complex(p) for p in ps] for ps in obj.get("poles", [])]
        return RationalSymbol(num, den, poles, cert)
    if kind == "expression":
        poles = [[_complex(p) for p in ps] for ps in obj.get("poles", [])]
        return ExpressionSymbol(obj["tree"], int(obj["arity"]), poles, cert)
    raise PreconditionError(f"unknown symbol kind {kind!r}")


def _default(o):
    if isinstance(o, np.ndarray):
        if np.iscomplexobj(o):
            return matrix_to_json(o)
        return o.tolist()
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _finite(o):
    # JSON has no inf/nan; encode them as strings
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    return o


def dumps(obj) -> str:
    return json.dumps(_finite(json.loads(json.dumps(obj, default=_default, allow_nan=True))), indent=2,
                      sort_keys=False)


def dump(obj, path):
    with open(path, "w") as fh:
        fh.write(dumps(obj))
        fh.write("\n")


def load(path):
    with open(path) as fh:
        return json.load(fh)
