"""Scenario configuration files.

A config is line oriented: ``[section]`` headers followed by
``key = value`` lines; ``#`` starts a comment.  Example::

    [params]
    p = 2
    a = 1
    k = 1
    sigma = 4
    n = 3
    R0 = 0
    Rmax = 1
    M0 = 1

    [f]
    kind = power
    coefficients = 1, 2      # f(r, t) = 1 * t^2

    [b]
    kind = constant
    coefficients = 0

    [grid]
    nodes = 1025

``kind`` is ``power`` (``c * t^q`` for f, ``c * r^q`` for b), ``constant``
or ``table:<path>``.  Table paths are relative to the config file; f tables
are CSV with columns ``r,t,f`` (or ``r,f`` for a t-independent source), b
tables have columns ``r,b``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ConfigError, InvalidInputError
from .model import DriftB, NonlinearityF, ProblemParams

ALLOWED = {
    "params": {"p", "a", "k", "sigma", "n", "C1", "C2", "R0", "Rmax", "blowup_cap", "M0"},
    "f": {"kind", "coefficients"},
    "b": {"kind", "coefficients", "delta"},
    "grid": {"nodes"},
}
REQUIRED_PARAMS = ("p", "a", "k", "sigma", "n")
DEFAULT_NODES = 1025


@dataclass
class Scenario:
    params: ProblemParams
    f: NonlinearityF
    b: DriftB
    M0: float = 1.0
    nodes: int = DEFAULT_NODES
    raw: Dict[str, Dict[str, str]] = field(default_factory=dict)


def parse_sections(text: str) -> Dict[str, Dict[str, Tuple[str, int]]]:
    """Split config text into ``{section: {key: (value, lineno)}}``."""
    sections: Dict[str, Dict[str, Tuple[str, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            current = line[1:-1].strip()
            if current not in ALLOWED:
                raise ConfigError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        if current is None:
            raise ConfigError("key outside of any section", lineno)
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in ALLOWED[current]:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno)
        sections[current][key] = (value, lineno)
    return sections


def _number(entry, what):
    value, lineno = entry
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{what} must be a real number (got {value!r})", lineno) from None


def _coefficients(section, what):
    if "coefficients" not in section:
        return [], None
    value, lineno = section["coefficients"]
    try:
        return [float(x) for x in value.split(",") if x.strip()], lineno
    except ValueError:
        raise ConfigError(f"{what} coefficients must be comma-separated reals", lineno) from None


def _read_table(path: Path, lineno):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read table {path}: {exc.strerror}", lineno) from None
    if len(rows) < 2:
        raise ConfigError(f"table {path} needs a header row and data", lineno)
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(x) for x in row] for row in rows[1:] if row], dtype=float)
    except ValueError:
        raise ConfigError(f"table {path} contains non-numeric data", lineno) from None
    return header, data


def _build_f(section, base: Path) -> NonlinearityF:
    kind, lineno = section.get("kind", ("constant", None))
    coeffs, clin = _coefficients(section, "f")
    if kind == "constant":
        return NonlinearityF.constant(coeffs[0] if coeffs else 0.0)
    if kind == "power":
        if not 1 <= len(coeffs) <= 2:
            raise ConfigError("power f takes coefficients c[, q]", clin or lineno)
        c, q = coeffs[0], (coeffs[1] if len(coeffs) > 1 else 1.0)
        return NonlinearityF.power(c, q)
    if kind.startswith("table:"):
        header, data = _read_table(base / kind[6:].strip(), lineno)
        if header == ["r", "f"]:
            return NonlinearityF.radial_table(data[:, 0], data[:, 1], description=kind)
        if header != ["r", "t", "f"]:
            raise ConfigError("f table header must be 'r,t,f' or 'r,f'", lineno)
        r_nodes = np.unique(data[:, 0])
        t_levels = np.unique(data[:, 1])
        if data.shape[0] != r_nodes.size * t_levels.size:
            raise ConfigError("f table must list every (r, t) pair exactly once", lineno)
        values = np.empty((r_nodes.size, t_levels.size))
        values[np.searchsorted(r_nodes, data[:, 0]), np.searchsorted(t_levels, data[:, 1])] = data[:, 2]
        return NonlinearityF.tabulated(r_nodes, t_levels, values, description=kind)
    raise ConfigError(f"unknown f kind {kind!r}", lineno)


def _build_b(section, base: Path) -> DriftB:
    kind, lineno = section.get("kind", ("constant", None))
    coeffs, clin = _coefficients(section, "b")
    delta = _number(section["delta"], "delta") if "delta" in section else 0.0
    if kind == "constant":
        return DriftB.constant(coeffs[0] if coeffs else 0.0, delta=delta)
    if kind == "power":
        if len(coeffs) != 2:
            raise ConfigError("power b takes coefficients c, q", clin or lineno)
        return DriftB.power(coeffs[0], coeffs[1], delta=delta)
    if kind.startswith("table:"):
        header, data = _read_table(base / kind[6:].strip(), lineno)
        if header != ["r", "b"]:
            raise ConfigError("b table header must be 'r,b'", lineno)
        return DriftB.tabulated(data[:, 0], data[:, 1], delta=delta, description=kind)
    raise ConfigError(f"unknown b kind {kind!r}", lineno)


def load_text(text: str, base: Optional[Path] = None) -> Scenario:
    """Parse config ``text``; table paths are resolved against ``base``."""
    base = base or Path(".")
    sections = parse_sections(text)
    params_sec = sections.get("params", {})
    for key in REQUIRED_PARAMS:
        if key not in params_sec:
            raise ConfigError(f"missing required key {key!r} in [params]")
    values = {key: _number(entry, key) for key, entry in params_sec.items()}
    M0 = values.pop("M0", 1.0)
    n = values["n"]
    if n != int(n):
        raise ConfigError("n must be an integer", params_sec["n"][1])
    values["n"] = int(n)
    try:
        params = ProblemParams(**values)
    except InvalidInputError as exc:
        raise ConfigError(str(exc)) from None
    if not M0 > 0:
        raise ConfigError(f"M0 > 0 required (got {M0})", params_sec["M0"][1])
    f = _build_f(sections.get("f", {}), base)
    try:
        b = _build_b(sections.get("b", {}), base)
    except InvalidInputError as exc:
        raise ConfigError(str(exc)) from None
    nodes = DEFAULT_NODES
    if "nodes" in sections.get("grid", {}):
        entry = sections["grid"]["nodes"]
        nodes = _number(entry, "nodes")
        if nodes != int(nodes) or nodes < 4:
            raise ConfigError("grid nodes must be an integer >= 4", entry[1])
        nodes = int(nodes)
    raw = {sec: {k: v for k, (v, _) in body.items()} for sec, body in sections.items()}
    return Scenario(params=params, f=f, b=b, M0=M0, nodes=nodes, raw=raw)


def load(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return load_text(text, base=path.parent)
