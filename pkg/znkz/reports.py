"""
Curve input schema, run configuration and JSON report envelopes

Reports are byte-stable: floats are decimal strings with a digit count fixed by
the precision, complex numbers are [re, im] pairs, rationals are "p/q" strings,
and nothing time-dependent is included. Fixture files add a provenance block.
"""

import hashlib
import json
import os
from datetime import datetime
from typing import Any, Dict, List, Optional, Union

from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from sympy import Rational

from . import __version__, config
from .algebra import OrderedPartition
from .curve import CurveSpec, decimal_digits, validate_curve
from .errors import InputError

Number = Union[str, int, float]

COMMANDS = (
    "genus", "periods", "solve", "check-kz", "check-singlet", "theta-solve", "check-thomae",
    "check-smirnov", "check-identities", "dim-count", "check-szego", "check-exact", "export-cycles",
)


class CurveFile(BaseModel):
    """{"N": int, "m": int, "lambdas": [[re, im], ...], "precision_bits": int}"""

    model_config = ConfigDict(extra="forbid")

    N: int = Field(ge=2)
    m: int = Field(ge=1)
    lambdas: List[Union[Number, List[Number]]]
    precision_bits: int = Field(default=config.DEFAULT_PRECISION_BITS, ge=config.MIN_PRECISION_BITS)

    @field_validator("lambdas")
    @classmethod
    def _pairs(cls, value):
        for item in value:
            if isinstance(item, list) and len(item) != 2:
                raise ValueError(f"complex values are [re, im] pairs, got {item}")
        return value

    def to_spec(self, precision_bits: Optional[int] = None) -> CurveSpec:
        bits = precision_bits or self.precision_bits
        values = [[str(v) for v in l] if isinstance(l, list) else str(l) for l in self.lambdas]
        with mp.workprec(bits):
            return validate_curve(self.N, self.m, values, bits)


def load_curve(path: str, precision_bits: Optional[int] = None) -> CurveSpec:
    """Read and validate a curve file; any problem is an InputError"""
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read curve file {path}: {e}")
    try:
        return CurveFile.model_validate(data).to_spec(precision_bits)
    except ValidationError as e:
        raise InputError(f"invalid curve file {path}: {e.errors()[0]['msg']}")
    except (TypeError, ValueError) as e:
        raise InputError(f"invalid curve file {path}: {e}")


class RunConfig(BaseModel):
    """One CLI invocation"""

    model_config = ConfigDict(extra="forbid")

    command: str
    curve_file: Optional[str] = None
    precision_bits: int = Field(default=config.DEFAULT_PRECISION_BITS, ge=config.MIN_PRECISION_BITS)
    output: Optional[str] = None
    seed: int = config.IDENTITY_SEED
    tolerance: Optional[float] = None
    options: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("command")
    @classmethod
    def _known(cls, value):
        if value not in COMMANDS:
            raise ValueError(f"unknown command '{value}'")
        return value

    def resolved_tolerance(self, margin: int = 16) -> float:
        return self.tolerance if self.tolerance is not None else config.tolerance(self.precision_bits, margin)


class CheckReport(BaseModel):
    residual: str
    tolerance: str
    passed: bool = Field(serialization_alias="pass")
    details: Dict[str, Any] = Field(default_factory=dict)


class IdentityResult(BaseModel):
    id: str
    params: Dict[str, Any]
    passed: bool = Field(serialization_alias="pass")
    trials: int
    informational: bool = False
    witness: Optional[Dict[str, Any]] = None
    value: Optional[Dict[str, str]] = None


class IdentityReport(BaseModel):
    results: List[IdentityResult]
    passed: bool = Field(serialization_alias="pass")


# Serialization

def real_str(x, bits: int) -> str:
    with mp.workprec(bits):
        return mp.nstr(mp.mpf(x), decimal_digits(bits))


def complex_pair(z, bits: int) -> List[str]:
    with mp.workprec(bits):
        z = mp.mpc(z)
        digits = decimal_digits(bits)
        return [mp.nstr(z.real, digits), mp.nstr(z.imag, digits)]


def rational_str(r: Rational) -> str:
    return str(Rational(r))


def complex_matrix(M, bits: int) -> List[List[List[str]]]:
    return [[complex_pair(M[i, j], bits) for j in range(M.cols)] for i in range(M.rows)]


def partition_entries(values: Dict[OrderedPartition, Any], bits: int) -> List[Dict[str, Any]]:
    keys = sorted(values, key=lambda k: k.blocks)
    return [{"partition": k.to_json(), "value": complex_pair(values[k], bits)} for k in keys]


def input_hash(spec: Optional[CurveSpec], arguments: Dict[str, Any]) -> str:
    """sha256 of the canonical curve JSON plus the command arguments"""
    payload = {"curve": spec.to_json() if spec is not None else None, "arguments": arguments}
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()


def envelope(run: RunConfig, spec: Optional[CurveSpec], body: Dict[str, Any]) -> Dict[str, Any]:
    arguments = {"command": run.command, "seed": run.seed, "tolerance": run.tolerance, **run.options}
    out = {"command": run.command, "precision_bits": run.precision_bits,
           "input_hash": input_hash(spec, arguments)}
    out.update(body)
    return out


def dumps(report: Dict[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False)


def write_report(report: Dict[str, Any], output: Optional[str] = None) -> None:
    text = dumps(report)
    if output:
        with open(output, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def write_fixture(report: Dict[str, Any], name: str, directory: Optional[str] = None) -> str:
    """Report plus provenance stamp under the fixtures directory"""
    directory = directory or config.FIXTURES_DIR
    os.makedirs(directory, exist_ok=True)
    stamped = dict(report)
    stamped["provenance"] = {
        "command": report.get("command"),
        "precision_bits": report.get("precision_bits"),
        "input_hash": report.get("input_hash"),
        "version": __version__,
        "created": datetime.now().isoformat(timespec="seconds"),
    }
    path = os.path.join(directory, f"{name}.json")
    with open(path, "w") as f:
        f.write(dumps(stamped) + "\n")
    return path
