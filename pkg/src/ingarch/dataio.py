"""Plain-text artifacts: count CSVs, chain CSVs, forecast/score tables, and
flat key=value metadata sidecars (schema-versioned)."""

from __future__ import annotations

import csv
import os

import numpy as np

from .core import CountSeries
from .count_dists import Family, InvalidParameterError
from .hmc import Chain

META_SCHEMA = "1"


class DataFormatError(ValueError):
    """Input file is not in the expected format."""


def read_counts_csv(path: str, split: int | None = None) -> CountSeries:
    """Load a headered single-column `count` CSV (extra columns ignored)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "count" not in reader.fieldnames:
            raise DataFormatError(f"{path}: expected a CSV with a 'count' header")
        values = []
        for i, row in enumerate(reader, start=2):
            raw = (row.get("count") or "").strip()
            try:
                v = int(raw)
            except ValueError:
                raise DataFormatError(
                    f"{path}:{i}: count {raw!r} is not an integer"
                ) from None
            if v < 0:
                raise DataFormatError(f"{path}:{i}: count {v} is negative")
            values.append(v)
    if not values:
        raise DataFormatError(f"{path}: no data rows")
    return CountSeries(np.asarray(values, dtype=np.int64), split=split)


def write_counts_csv(path: str, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["count"])
        for v in np.asarray(values):
            w.writerow([int(v)])


def write_meta(path: str, entries: dict) -> None:
    """Flat key=value sidecar, newline-separated, schema-versioned."""
    with open(path, "w") as fh:
        fh.write(f"schema={META_SCHEMA}\n")
        for k, v in entries.items():
            fh.write(f"{k}={v}\n")


def read_meta(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataFormatError(f"{path}: malformed meta line {line!r}")
            k, v = line.split("=", 1)
            out[k] = v
    return out


def read_config(path: str) -> dict:
    """Flat key=value config file mirroring CLI flags (dashes or underscores)."""
    out = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataFormatError(f"{path}:{ln}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def save_chain(chain: Chain, path: str) -> None:
    """Chain CSV (one column per parameter plus energy and accepted) + meta."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(chain.param_names) + ["energy", "accepted"])
        for i in range(len(chain)):
            w.writerow(
                [f"{v:.17g}" for v in chain.draws[i]]
                + [f"{chain.energies[i]:.17g}", int(chain.accepted[i])]
            )
    write_meta(
        path + ".meta",
        {
            "kind": "chain",
            "family": chain.family.value,
            "p": chain.p,
            "q": chain.q,
            "accept_rate": f"{chain.accept_rate:.6g}",
            "divergences": chain.divergences,
            "step_size": f"{chain.step_size:.6g}",
        },
    )


def load_chain(path: str, family: str | None = None,
               p: int | None = None, q: int | None = None) -> Chain:
    """Rebuild a Chain from its CSV (+meta sidecar when family/p/q omitted)."""
    meta_path = path + ".meta"
    if family is None or p is None or q is None:
        if not os.path.exists(meta_path):
            raise DataFormatError(
                f"{path}: no meta sidecar; pass family, p, and q explicitly"
            )
        meta = read_meta(meta_path)
        family = meta["family"]
        p = int(meta["p"])
        q = int(meta["q"])
    fam = Family.parse(family)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-2:] != ["energy", "accepted"]:
            raise DataFormatError(f"{path}: not a chain CSV")
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        raise DataFormatError(f"{path}: empty chain")
    arr = np.asarray(rows)
    draws = arr[:, :-2]
    expected = 1 + p + q + (0 if fam is Family.POISSON else 1)
    if draws.shape[1] != expected:
        raise DataFormatError(
            f"{path}: {draws.shape[1]} parameter columns, expected {expected}"
        )
    return Chain(
        draws=draws,
        unconstrained=np.full_like(draws, np.nan),
        param_names=header[:-2],
        family=fam,
        p=p,
        q=q,
        accept_rate=float(np.mean(arr[:, -1])),
        energies=arr[:, -2],
        accepted=arr[:, -1].astype(bool),
        divergences=0,
        step_size=0.0,
        mass_diag=np.ones(draws.shape[1]),
    )


def write_table_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_forecast_csv(path: str, rows: list[dict]) -> None:
    if not rows:
        raise InvalidParameterError("no forecast rows to write")
    header = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([row[k] for k in header])


def read_forecast_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [dict(r) for r in reader]
