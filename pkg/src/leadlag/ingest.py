"""File ingestion: price CSVs and event-metadata JSON.

Errors carry 1-based line numbers (or record indices) so a bad row in a
half-million-line export can be found without bisecting the file.
"""

from __future__ import annotations

import csv
import json
from datetime import date
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DuplicateRow, RangeError, SchemaError
from .semantic import EventMetadata
from .series import PriceSeries

PRICE_COLUMNS = ("market_id", "date", "yes_price")
METADATA_FIELDS = ("market_id", "title", "description", "event_group")


def load_prices(path) -> dict[str, PriceSeries]:
    """Parse a price CSV with columns market_id, date, yes_price.

    Column order is free and extra columns are ignored; dates are ISO
    YYYY-MM-DD; prices are percentage points in [0, 100].  Duplicate
    (market_id, date) rows, malformed fields, and out-of-range prices all
    fail with the offending line number.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        missing = [c for c in PRICE_COLUMNS if c not in header]
        if missing:
            raise SchemaError(
                f"{path}: header is missing column(s) {', '.join(missing)}")
        col = {name: header.index(name) for name in PRICE_COLUMNS}

        rows: dict[str, list[tuple[date, float]]] = {}
        seen: set[tuple[str, date]] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise SchemaError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            market_id = row[col["market_id"]].strip()
            if not market_id:
                raise SchemaError(f"{path}:{lineno}: empty market_id")
            try:
                day = date.fromisoformat(row[col["date"]].strip())
            except ValueError:
                raise SchemaError(
                    f"{path}:{lineno}: bad date {row[col['date']]!r} "
                    f"(want YYYY-MM-DD)") from None
            try:
                price = float(row[col["yes_price"]])
            except ValueError:
                raise SchemaError(
                    f"{path}:{lineno}: bad price {row[col['yes_price']]!r}") from None
            if not np.isfinite(price) or not 0.0 <= price <= 100.0:
                raise RangeError(
                    f"{path}:{lineno}: price {price} outside [0, 100]")
            if (market_id, day) in seen:
                raise DuplicateRow(
                    f"{path}:{lineno}: duplicate row for ({market_id}, {day})")
            seen.add((market_id, day))
            rows.setdefault(market_id, []).append((day, price))

    if not rows:
        raise SchemaError(f"{path}: no data rows")
    out: dict[str, PriceSeries] = {}
    for market_id in sorted(rows):
        obs = sorted(rows[market_id])
        out[market_id] = PriceSeries(market_id,
                                     tuple(d for d, _ in obs),
                                     [p for _, p in obs])
    return out


def load_metadata(path) -> dict[str, EventMetadata]:
    """Parse an event-metadata JSON array.

    Each record needs market_id, title, description, and event_group, all
    non-empty strings; duplicate market_ids are rejected.
    """
    path = Path(path)
    try:
        records = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(records, list):
        raise SchemaError(f"{path}: metadata must be a JSON array")
    out: dict[str, EventMetadata] = {}
    for idx, record in enumerate(records):
        where = f"{path}: record #{idx}"
        if not isinstance(record, dict):
            raise SchemaError(f"{where} is not an object")
        for field in METADATA_FIELDS:
            if field not in record:
                raise SchemaError(f"{where} is missing field {field!r}")
            if not isinstance(record[field], str) or not record[field].strip():
                raise SchemaError(f"{where}: field {field!r} must be a "
                                  f"non-empty string")
        mid = record["market_id"]
        if mid in out:
            raise DuplicateRow(f"{where}: duplicate market_id {mid!r}")
        out[mid] = EventMetadata(market_id=mid, title=record["title"],
                                 description=record["description"],
                                 event_group=record["event_group"])
    return out


def write_prices_csv(prices: Mapping[str, PriceSeries], path) -> None:
    """Write price series in the load_prices format, sorted for stability."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PRICE_COLUMNS)
        for mid in sorted(prices):
            series = prices[mid]
            for day, price in zip(series.dates, series.prices):
                writer.writerow([mid, day.isoformat(), repr(float(price))])


def write_metadata_json(metadata: Mapping[str, EventMetadata], path) -> None:
    """Write metadata in the load_metadata format, sorted for stability."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = []
    for mid in sorted(metadata):
        meta = metadata[mid]
        records.append({"market_id": meta.market_id, "title": meta.title,
                        "description": meta.description,
                        "event_group": meta.event_group})
    path.write_text(json.dumps(records, indent=2, sort_keys=True) + "\n")
