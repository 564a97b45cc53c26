"""File formats: F3T tensor container, instance/config JSON, curve CSV, PGM/PPM."""
from __future__ import annotations

import csv
import json
import struct
from importlib import resources
from pathlib import Path
from typing import Mapping

import jsonschema
import numpy as np

from .harness import RetentionCurve
from .model import HyperParams

MAGIC = b"F3TK"
VERSION = 1


class FormatError(ValueError):
    """Malformed input file or document."""


def write_f3t(path, tensors: Mapping[str, np.ndarray]) -> None:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for key, arr in tensors.items():
        kb = key.encode("utf-8")
        if len(kb) > 0xFFFF:
            raise FormatError(f"key too long: {key[:32]}...")
        arr = np.asarray(arr, dtype="<f4")
        if arr.ndim > 255:
            raise FormatError("rank exceeds 255")
        chunks.append(struct.pack("<H", len(kb)) + kb + struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr).tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_f3t(path) -> dict[str, np.ndarray]:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e.strerror}") from None
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    try:
        version, count = struct.unpack_from("<II", data, 4)
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        off = 12
        out: dict[str, np.ndarray] = {}
        for _ in range(count):
            (klen,) = struct.unpack_from("<H", data, off)
            off += 2
            if len(data) < off + klen:
                raise FormatError(f"{path}: truncated key")
            key = data[off:off + klen].decode("utf-8")
            off += klen
            (rank,) = struct.unpack_from("<B", data, off)
            off += 1
            dims = struct.unpack_from(f"<{rank}I", data, off)
            off += 4 * rank
            nbytes = 4 * int(np.prod(dims, dtype=np.int64))
            if off + nbytes > len(data):
                raise FormatError(f"{path}: payload of {key!r} runs past end of file")
            if key in out:
                raise FormatError(f"{path}: duplicate key {key!r}")
            out[key] = np.frombuffer(data, dtype="<f4", count=nbytes // 4, offset=off).reshape(dims).copy()
            off += nbytes
    except (struct.error, UnicodeDecodeError) as e:
        raise FormatError(f"{path}: truncated or corrupt container ({e})") from None
    if off != len(data):
        raise FormatError(f"{path}: {len(data) - off} trailing bytes after last entry")
    return out


def _schema(name: str) -> dict:
    return json.loads(resources.files("f3a").joinpath("data", name).read_text())


def _load_json(path, schema_name: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from None
    try:
        jsonschema.validate(doc, _schema(schema_name))
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise FormatError(f"{path}: {where}: {e.message}") from None
    return doc


def load_instance(path) -> dict:
    return _load_json(path, "instance.schema.json")


def load_bench_config(path) -> dict:
    return _load_json(path, "bench.schema.json")


def load_curves(path) -> list[RetentionCurve]:
    """Read model,method,rho,accuracy rows into one curve per (model, method)."""
    points: dict = {}
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or set(reader.fieldnames) != {"model", "method", "rho", "accuracy"}:
                raise FormatError(f"{path}: expected columns model,method,rho,accuracy, got {reader.fieldnames}")
            for lineno, row in enumerate(reader, start=2):
                try:
                    rho, acc = float(row["rho"]), float(row["accuracy"])
                except (TypeError, ValueError):
                    raise FormatError(f"{path}:{lineno}: non-numeric rho or accuracy") from None
                points.setdefault((row["model"], row["method"]), []).append((rho, acc))
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e.strerror}") from None
    curves = []
    for (model, method), pts in points.items():
        try:
            curves.append(RetentionCurve(model, method, tuple(pts)))
        except ValueError as e:
            raise FormatError(f"{path}: {e}") from None
    if not curves:
        raise FormatError(f"{path}: no rows")
    return curves


def shipped_curves_path() -> Path:
    return Path(str(resources.files("f3a").joinpath("data", "published_accuracies.csv")))


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _to_bytes(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 1e-12:
        return np.zeros(values.shape, dtype=np.uint8)
    return np.round((values - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_pgm(path, values: np.ndarray, rows: int, cols: int) -> None:
    img = _to_bytes(np.asarray(values, dtype=np.float64).reshape(rows, cols))
    Path(path).write_bytes(f"P5\n{cols} {rows}\n255\n".encode("ascii") + img.tobytes())


def write_ppm_overlay(path, values: np.ndarray, selected, rows: int, cols: int) -> None:
    """Greyscale field with selected tokens' red channel forced to 255."""
    gray = _to_bytes(np.asarray(values, dtype=np.float64).reshape(-1))
    rgb = np.repeat(gray[:, None], 3, axis=1)
    rgb[np.asarray(list(selected), dtype=np.int64), 0] = 255
    Path(path).write_bytes(f"P6\n{cols} {rows}\n255\n".encode("ascii") + rgb.reshape(rows, cols, 3).tobytes())


def hyperparam_schema() -> dict:
    """JSON schema fragment for partial HyperParams overrides."""
    props = {}
    for name, value in HyperParams().to_dict().items():
        if isinstance(value, bool):
            props[name] = {"type": "boolean"}
        elif isinstance(value, int):
            props[name] = {"type": "integer"}
        else:
            props[name] = {"type": "number"}
    return {"type": "object", "properties": props, "additionalProperties": False}
