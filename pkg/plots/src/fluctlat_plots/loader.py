"""Load fluctlat CSV artifacts into validated in-memory tables."""

import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import SchemaError

# expected columns per artifact; every listed column must parse as float
SCHEMAS = {
    "rho.csv": ["run_count", "t", "x", "value"],
    "q.csv": ["run_count", "t", "x", "value"],
    "k.csv": ["run_count", "t", "x", "value"],
    "fields.csv": ["t", "x", "rho", "qdot", "kdot"],
    "convergence.csv": ["n", "density_gap", "current_gap", "reaction_gap"],
}

OPTIONAL = ("fields.csv", "convergence.csv", "rho.csv", "q.csv", "k.csv")


@dataclass
class ResultSet:
    """Validated tables from one artifact directory, keyed by file name."""

    directory: str
    tables: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)

    def get(self, name: str):
        return self.tables.get(name)


def _read_table(path: str, name: str) -> pd.DataFrame:
    try:
        df = pd.read_csv(path)
    except Exception as exc:
        raise SchemaError(f"{name}: cannot parse CSV ({exc})") from exc
    missing = [c for c in SCHEMAS[name] if c not in df.columns]
    if missing:
        raise SchemaError(f"{name}: missing column(s) {', '.join(missing)}")
    for col in SCHEMAS[name]:
        values = pd.to_numeric(df[col], errors="coerce")
        bad = values.isna() & df[col].notna()
        if bad.any():
            row = int(bad.idxmax()) + 2  # header line + 1-based
            raise SchemaError(
                f"{name}: column {col!r} has a non-numeric cell at line {row}"
            )
        if values.isna().any():
            row = int(values.isna().idxmax()) + 2
            raise SchemaError(f"{name}: column {col!r} is empty at line {row}")
        df[col] = values.astype(float)
    return df


def load_results(directory: str) -> ResultSet:
    """Load every recognized artifact in `directory`.

    Missing optional files only disable the plots that need them (with a
    warning for fields.csv); schema violations raise SchemaError naming
    the file, column and line.
    """
    if not os.path.isdir(directory):
        raise SchemaError(f"{directory}: not a directory")
    rs = ResultSet(directory=directory)
    found = False
    for name in SCHEMAS:
        path = os.path.join(directory, name)
        if not os.path.exists(path):
            if name == "fields.csv":
                warnings.warn(
                    f"{directory}: no fields.csv; field plots disabled",
                    stacklevel=2,
                )
            continue
        rs.tables[name] = _read_table(path, name)
        found = True
    if not found:
        raise SchemaError(f"{directory}: no fluctlat CSV artifacts found")
    mpath = os.path.join(directory, "manifest.json")
    if os.path.exists(mpath):
        try:
            with open(mpath, "r", encoding="utf-8") as fh:
                rs.manifest = json.load(fh)
        except (json.JSONDecodeError, OSError) as exc:
            raise SchemaError(f"manifest.json: {exc}") from exc
    return rs
