"""JSON encodings for structures and line-delimited record streams.

Floats go through ``json``'s shortest round-trip repr, so coordinates
survive a write/read cycle bit for bit.
"""

from __future__ import annotations

import json
from typing import IO, Iterator

import numpy as np

from .geometry import Kind, Polygon, Structure


def structure_to_json(s: Structure) -> dict:
    kinds = {p.kind.value for p in s}
    kind = kinds.pop() if len(kinds) == 1 else None
    out = {"polygons": [p.points.tolist() for p in s]}
    if kind is not None:
        out["kind"] = kind
    else:
        out["kinds"] = [p.kind.value for p in s]
    return out


def structure_from_json(obj: dict, default_kind: Kind | str = Kind.CLOSED) -> Structure:
    polys = obj["polygons"]
    if "kinds" in obj:
        kinds = obj["kinds"]
        if len(kinds) != len(polys):
            raise ValueError("'kinds' and 'polygons' differ in length")
    else:
        kinds = [obj.get("kind", default_kind)] * len(polys)
    return Structure([Polygon(np.array(p, float).reshape(-1, 2), k) for p, k in zip(polys, kinds)])


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dumps_record(record: dict) -> str:
    # inf objectives are legal values (infeasible roads), so allow_nan stays on
    return json.dumps(record, default=_default, sort_keys=False, separators=(",", ":"))


class RecordWriter:
    """Append one JSON document per line and flush after each."""

    def __init__(self, stream: IO[str]):
        self.stream = stream
        self.count = 0

    def write(self, record: dict) -> None:
        self.stream.write(dumps_record(record) + "\n")
        self.stream.flush()
        self.count += 1


def read_records(stream: IO[str]) -> Iterator[dict]:
    """Yield complete records; a truncated final line is skipped."""
    for line in stream:
        if not line.endswith("\n"):
            try:
                yield json.loads(line)
            except json.JSONDecodeError:
                return
            return
        if line.strip():
            yield json.loads(line)
