"""JSON file formats for systems, schedules, clouds and norms.

Output is deterministic: keys keep insertion order and floats are written
with 17 significant digits.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .core import ControlSet, InvalidInputError, Schedule


class ParseError(InvalidInputError):
    """A malformed input file; the message names the file and location."""


def _fmt(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError(f"cannot serialize non-finite float {x}")
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_fmt(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # numeric rows stay on one line
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_fmt(v, indent, level) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_fmt(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _fmt(obj, indent, 0) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return data


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ParseError(f"{where}: missing field {key!r}")
    return data[key]


def system_to_dict(sys: ControlSet) -> dict:
    return {
        "dim": sys.d,
        "generators": [g.ravel().tolist() for g in sys.generators],
        "labels": list(sys.labels),
    }


def system_from_dict(data: dict, where: str = "system") -> ControlSet:
    d = _require(data, "dim", where)
    gens = _require(data, "generators", where)
    if not isinstance(d, int) or d < 1:
        raise ParseError(f"{where}: 'dim' must be a positive integer")
    mats = []
    for i, g in enumerate(gens):
        arr = np.asarray(g, dtype=float)
        if arr.size != d * d:
            raise ParseError(f"{where}: generators[{i}] has {arr.size} entries, expected {d * d}")
        mats.append(arr.reshape(d, d))
    try:
        return ControlSet(mats, data.get("labels"))
    except InvalidInputError as exc:
        raise ParseError(f"{where}: {exc}") from None


def schedule_to_dict(sched: Schedule) -> dict:
    return {"segments": [{"weights": w.tolist(), "duration": t} for w, t in sched.segments]}


def schedule_from_dict(data: dict, where: str = "schedule") -> Schedule:
    segs = _require(data, "segments", where)
    try:
        return Schedule([(s["weights"], s["duration"]) for s in segs])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{where}: bad segment ({exc})") from None
    except InvalidInputError as exc:
        raise ParseError(f"{where}: {exc}") from None


def cloud_to_dict(cloud) -> dict:
    return {"dim": cloud.d, "epsilon": cloud.epsilon, "points": cloud.points.tolist(),
            "metadata": cloud.metadata}


def cloud_from_dict(data: dict, where: str = "cloud"):
    from .reach import PointCloud

    d = _require(data, "dim", where)
    eps = _require(data, "epsilon", where)
    pts = np.asarray(_require(data, "points", where), dtype=float)
    if pts.size == 0:
        pts = pts.reshape(0, d)
    if pts.ndim != 2 or pts.shape[1] != d:
        raise ParseError(f"{where}: points must be a list of length-{d} rows")
    try:
        return PointCloud(pts, eps, data.get("metadata", ""))
    except InvalidInputError as exc:
        raise ParseError(f"{where}: {exc}") from None


def trajectory_to_dict(traj) -> dict:
    return {"times": traj.times.tolist(), "points": traj.points.tolist()}


def load(path, kind: str):
    """Read a file of the given kind: system, schedule, cloud, body or norm."""
    data = read_json(path)
    where = str(path)
    if kind == "system":
        return system_from_dict(data, where)
    if kind == "schedule":
        return schedule_from_dict(data, where)
    if kind == "cloud":
        return cloud_from_dict(data, where)
    if kind == "body":
        from .construct import body_from_dict

        try:
            return body_from_dict(data)
        except (KeyError, InvalidInputError) as exc:
            raise ParseError(f"{where}: {exc}") from None
    if kind == "norm":
        from .spectral import NormApprox

        try:
            return NormApprox.from_dict(data)
        except (KeyError, InvalidInputError) as exc:
            raise ParseError(f"{where}: {exc}") from None
    raise ValueError(f"unknown file kind {kind!r}")
