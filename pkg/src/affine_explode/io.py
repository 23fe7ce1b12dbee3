"""JSON model configs and lossless CSV tables.

Config files hold either a canonical model::

    {"m": 1, "n": 1, "index_set": [1], "A_V": [[-1]], "A_C": [[-0.16]],
     "A_D": [[0]], "b_hat": [0.5625, -0.045], "pi": [[[0]], [[0.1536]]]}

or raw parameters ``{"m", "n", "b", "B", "a", "alpha"}``. Matrices are
row-major nested lists and ``index_set`` is one-based. Optional ``theta``
and ``X0`` give the log-price exponent and initial state, in the
coordinates of the supplied parameters.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import AdmissibilityError, ConfigError, DimensionMismatch
from .model import (
    AffineModelSpec,
    CanonicalModel,
    EquityMapping,
    ValidationReport,
    to_canonical,
    validate_admissible,
)

CANONICAL_KEYS = ("m", "n", "index_set", "A_V", "A_C", "A_D", "b_hat", "pi")
RAW_KEYS = ("m", "n", "b", "B", "a", "alpha")


@dataclass(frozen=True, eq=False)
class LoadedModel:
    """A model read from a config together with its optional equity data."""

    model: CanonicalModel
    spec: AffineModelSpec | None
    equity: EquityMapping | None
    source: str


def _array(doc: dict, key: str, shape: tuple[int, ...]) -> np.ndarray:
    try:
        arr = np.asarray(doc[key], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: not a numeric array ({exc})") from None
    if arr.size == 0 and int(np.prod(shape)) == 0:
        return np.zeros(shape)
    if arr.shape != shape:
        raise DimensionMismatch(f"{key}: expected shape {shape}, got {arr.shape}")
    return arr


def _dims(doc: dict) -> tuple[int, int]:
    try:
        m, n = int(doc["m"]), int(doc["n"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("config needs integer fields 'm' and 'n'") from None
    if m < 1 or n < 0:
        raise DimensionMismatch(f"need m >= 1 and n >= 0, got m={m}, n={n}")
    return m, n


def spec_from_dict(doc: dict) -> AffineModelSpec:
    """Raw specification from a parsed config."""
    missing = [k for k in RAW_KEYS if k not in doc]
    if missing:
        raise ConfigError(f"raw config is missing {missing}")
    m, n = _dims(doc)
    d = m + n
    return AffineModelSpec(
        m,
        n,
        _array(doc, "b", (d,)),
        _array(doc, "B", (d, d)),
        _array(doc, "a", (d, d)),
        _array(doc, "alpha", (d, d, d)),
    )


def canonical_from_dict(doc: dict) -> CanonicalModel:
    """Canonical model from a parsed config (one-based ``index_set``)."""
    missing = [k for k in CANONICAL_KEYS if k not in doc]
    if missing:
        raise ConfigError(f"canonical config is missing {missing}")
    m, n = _dims(doc)
    idx = [int(i) - 1 for i in doc["index_set"]]
    if any(i < 0 or i >= m for i in idx):
        raise DimensionMismatch(f"index_set entries must lie in 1..{m}")
    return CanonicalModel(
        m,
        n,
        tuple(idx),
        _array(doc, "A_V", (m, m)),
        _array(doc, "A_C", (m, n)),
        _array(doc, "A_D", (n, n)),
        _array(doc, "b_hat", (m + n,)),
        _array(doc, "pi", (m + 1, n, n)),
    )


def config_kind(doc: dict) -> str:
    if all(k in doc for k in ("A_V", "pi")):
        return "canonical"
    if all(k in doc for k in ("B", "alpha")):
        return "raw"
    raise ConfigError("config matches neither the canonical nor the raw layout")


def validate_config(doc: dict) -> ValidationReport:
    """Constraint report for a parsed config without raising on violations."""
    if config_kind(doc) == "raw":
        return validate_admissible(spec_from_dict(doc))
    try:
        canonical_from_dict(doc)
    except AdmissibilityError as exc:
        return exc.report
    return ValidationReport()


def model_from_dict(doc: dict, source: str = "<dict>") -> LoadedModel:
    """Build the canonical model and equity mapping described by ``doc``.

    Raises
    ------
    AdmissibilityError
        If the parameters violate any constraint.
    ConfigError
        On malformed input.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    spec = None
    if config_kind(doc) == "raw":
        spec = spec_from_dict(doc)
        report = validate_admissible(spec)
        if report:
            raise AdmissibilityError(report)
        model = to_canonical(spec)
    else:
        model = canonical_from_dict(doc)
    equity = None
    if "theta" in doc and "X0" in doc:
        d = model.d
        theta = model.exponent_from_original(_array(doc, "theta", (d,)))
        X0 = model.state_from_original(_array(doc, "X0", (d,)))
        equity = EquityMapping(theta, X0)
    return LoadedModel(model, spec, equity, source)


def load_model(path: str | Path) -> LoadedModel:
    """Read a JSON config file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return model_from_dict(doc, str(path))


def load_config_dict(path: str | Path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def model_to_dict(model: CanonicalModel, equity: EquityMapping | None = None) -> dict[str, Any]:
    """Canonical config for ``model``; ``load`` of the result reproduces it."""
    doc: dict[str, Any] = {
        "m": model.m,
        "n": model.n,
        "index_set": [i + 1 for i in model.index_set],
        "A_V": model.A_V.tolist(),
        "A_C": model.A_C.tolist(),
        "A_D": model.A_D.tolist(),
        "b_hat": model.b_hat.tolist(),
        "pi": model.pi.tolist(),
    }
    if equity is not None:
        doc["theta"] = equity.theta.tolist()
        doc["X0"] = equity.X0.tolist()
    return doc


# --------------------------------------------------------------------------
# CSV


def fmt(x: Any) -> str:
    """17 significant digits for floats, ``str`` otherwise."""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return str(x)


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([fmt(x) for x in row])
    return buf.getvalue()


def _parse(cell: str) -> float | str:
    try:
        return float(cell)
    except ValueError:
        return cell


def read_csv(text: str) -> tuple[list[str], list[list[float | str]]]:
    """Parse a table written by :func:`write_csv`; numeric cells become floats."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ConfigError("empty CSV")
    header, body = rows[0], rows[1:]
    for k, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ConfigError(f"CSV line {k}: {len(r)} fields, header has {len(header)}")
    return header, [[_parse(c) for c in r] for r in body]


def read_csv_columns(text: str, prefix: str) -> np.ndarray:
    """Numeric columns whose names start with ``prefix``, as a 2-D array."""
    header, body = read_csv(text)
    cols = [j for j, h in enumerate(header) if h.startswith(prefix)]
    if not cols:
        raise ConfigError(f"CSV has no column starting with {prefix!r}")
    try:
        return np.array([[float(r[j]) for j in cols] for r in body], dtype=np.float64).reshape(len(body), len(cols))
    except (TypeError, ValueError):
        raise ConfigError(f"non-numeric entry in {prefix!r} columns") from None
