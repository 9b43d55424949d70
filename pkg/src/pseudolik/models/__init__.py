"""The three parametric families and their plain-text parameter files.

File grammar (see ``textio``): `family` names the family; `q` (and `r` for
the restricted Boltzmann machine) give shapes; matrices are row-major
whitespace-separated decimals at 17 significant digits.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParseError
from ..textio import format_floats, parse_kv_lines, take_floats, take_int, take_str
from . import categorical, fvbm, rbm
from .categorical import CategoricalParams
from .fvbm import FvbmParams
from .rbm import RbmParams

FAMILIES = ("categorical", "fvbm", "rbm")

ModelParams = CategoricalParams | FvbmParams | RbmParams


def family_of(params: ModelParams) -> str:
    if isinstance(params, CategoricalParams):
        return "categorical"
    if isinstance(params, FvbmParams):
        return "fvbm"
    if isinstance(params, RbmParams):
        return "rbm"
    raise TypeError(f"unknown parameter type {type(params).__name__}")


def params_to_text(params: ModelParams) -> str:
    fam = family_of(params)
    lines = [f"family {fam}", f"q {params.q}"]
    if fam == "categorical":
        lines.append(f"pi {format_floats(params.pi)}")
    elif fam == "fvbm":
        lines.append(f"M {format_floats(params.M.ravel())}")
        lines.append(f"b {format_floats(params.b)}")
    else:
        lines.append(f"r {params.r}")
        lines.append(f"M {format_floats(params.M.ravel())}")
        lines.append(f"a {format_floats(params.a)}")
        lines.append(f"b {format_floats(params.b)}")
    return "\n".join(lines) + "\n"


def params_from_kv(kv: dict[str, list[str]]) -> ModelParams:
    fam = take_str(kv, "family")
    if fam not in FAMILIES:
        raise ParseError(f"unknown family {fam!r}; expected one of {FAMILIES}")
    q = take_int(kv, "q")
    if q < 1:
        raise ParseError("q must be positive")
    if fam == "categorical":
        return CategoricalParams(np.asarray(take_floats(kv, "pi", q)))
    if fam == "fvbm":
        M = np.asarray(take_floats(kv, "M", q * q)).reshape(q, q)
        return FvbmParams(M, np.asarray(take_floats(kv, "b", q)))
    r = take_int(kv, "r")
    if r < 1:
        raise ParseError("r must be positive")
    M = np.asarray(take_floats(kv, "M", q * r)).reshape(q, r)
    return RbmParams(M, np.asarray(take_floats(kv, "a", q)), np.asarray(take_floats(kv, "b", r)))


def params_from_text(text: str) -> ModelParams:
    return params_from_kv(parse_kv_lines(text))


def write_params(path, params: ModelParams) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(params_to_text(params))


def read_params(path) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        return params_from_text(fh.read())


__all__ = [
    "CategoricalParams",
    "FvbmParams",
    "RbmParams",
    "ModelParams",
    "FAMILIES",
    "categorical",
    "fvbm",
    "rbm",
    "family_of",
    "params_to_text",
    "params_from_text",
    "params_from_kv",
    "write_params",
    "read_params",
]
