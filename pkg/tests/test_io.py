import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from f3a import io
from f3a.io import FormatError, read_f3t, write_f3t


def test_round_trip_bit_patterns(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {}
    for i in range(50):
        rank = int(rng.integers(0, 4))
        shape = tuple(int(x) for x in rng.integers(1, 6, rank))
        tensors[f"t{i}/ключ"] = rng.standard_normal(shape).astype("<f4")
    tensors["special"] = np.array([np.nan, np.inf, -np.inf, -0.0, 1e-45], dtype="<f4")
    path = tmp_path / "x.f3t"
    write_f3t(path, tensors)
    back = read_f3t(path)
    assert list(back) == list(tensors)
    for k, v in tensors.items():
        assert back[k].shape == v.shape
        assert back[k].tobytes() == v.tobytes()


@given(arrays(np.float32, st.tuples(st.integers(0, 4), st.integers(1, 4)), elements=st.floats(width=32)))
@settings(max_examples=50, deadline=None)
def test_round_trip_property(tmp_path_factory, arr):
    path = tmp_path_factory.mktemp("f3t") / "p.f3t"
    write_f3t(path, {"a": arr})
    assert read_f3t(path)["a"].tobytes() == arr.astype("<f4").tobytes()


def test_layout_is_as_documented(tmp_path):
    path = tmp_path / "x.f3t"
    write_f3t(path, {"ab": np.array([[1.0, 2.0]], dtype="<f4")})
    raw = path.read_bytes()
    assert raw[:4] == b"F3TK"
    assert struct.unpack_from("<II", raw, 4) == (1, 1)
    assert struct.unpack_from("<H", raw, 12) == (2,)
    assert raw[14:16] == b"ab"
    assert raw[16] == 2
    assert struct.unpack_from("<II", raw, 17) == (1, 2)
    assert struct.unpack_from("<2f", raw, 25) == (1.0, 2.0)
    assert len(raw) == 33


def corrupt(tmp_path, raw):
    p = tmp_path / "bad.f3t"
    p.write_bytes(raw)
    with pytest.raises(FormatError):
        read_f3t(p)


def test_rejects_corruption(tmp_path):
    path = tmp_path / "x.f3t"
    write_f3t(path, {"a": np.ones((2, 3)), "b": np.zeros(4)})
    good = path.read_bytes()
    corrupt(tmp_path, b"XXXX" + good[4:])
    corrupt(tmp_path, good[:4] + struct.pack("<I", 2) + good[8:])
    corrupt(tmp_path, good[:-1])
    corrupt(tmp_path, good + b"\0")
    corrupt(tmp_path, good[:10])
    corrupt(tmp_path, good[:8] + struct.pack("<I", 3) + good[12:])
    with pytest.raises(FormatError):
        read_f3t(tmp_path / "missing.f3t")


def test_rejects_duplicate_keys(tmp_path):
    entry = struct.pack("<H", 1) + b"k" + struct.pack("<BI", 1, 1) + struct.pack("<f", 1.0)
    corrupt(tmp_path, b"F3TK" + struct.pack("<II", 1, 2) + entry + entry)


def test_pgm_and_ppm_parse(tmp_path):
    rows, cols = 5, 7
    values = np.linspace(-1, 1, rows * cols)
    io.write_pgm(tmp_path / "h.pgm", values, rows, cols)
    io.write_ppm_overlay(tmp_path / "h.ppm", values, [0, 8, 34], rows, cols)
    with Image.open(tmp_path / "h.pgm") as im:
        assert im.mode == "L" and im.size == (cols, rows)
        px = np.asarray(im)
        assert px[0, 0] == 0 and px[-1, -1] == 255
    with Image.open(tmp_path / "h.ppm") as im:
        assert im.mode == "RGB" and im.size == (cols, rows)
        px = np.asarray(im)
        assert px[1, 1, 0] == 255 and px[0, 0, 0] == 255 and px[4, 6, 0] == 255
        assert px[0, 1].tolist() == [px[0, 1, 1]] * 3
    raw = (tmp_path / "h.pgm").read_bytes()
    assert raw.startswith(b"P5\n7 5\n255\n")


def test_constant_field_image_is_black(tmp_path):
    io.write_pgm(tmp_path / "c.pgm", np.full(4, 0.3), 2, 2)
    assert (tmp_path / "c.pgm").read_bytes().endswith(b"\0\0\0\0")


def test_instance_schema(tmp_path):
    doc = {"grid": {"rows": 2, "cols": 2, "tensor_key": "v"}, "prompt": {"question": "q"}, "budget": {"ratio": 0.5}}
    p = tmp_path / "i.json"
    p.write_text(json.dumps(doc))
    assert io.load_instance(p) == doc
    for bad in (
        {**doc, "extra": 1},
        {**doc, "budget": {"ratio": 0}},
        {**doc, "grid": {"rows": 2, "cols": 2}},
        {**doc, "params": {"heads": 8, "nope": 1}},
        {**doc, "method": "random"},
        {**doc, "prompt": {"question": "q", "options": [{"letter": "A", "text": "x"}]}},
    ):
        p.write_text(json.dumps(bad))
        with pytest.raises(FormatError):
            io.load_instance(p)
    p.write_text("{not json")
    with pytest.raises(FormatError, match="invalid JSON"):
        io.load_instance(p)


def test_shipped_params_schema_tracks_hyperparams():
    assert io._schema("instance.schema.json")["properties"]["params"] == io.hyperparam_schema()
    assert io._schema("bench.schema.json")["properties"]["params"] == io.hyperparam_schema()


def test_load_curves(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("model,method,rho,accuracy\nm,a,0.2,50\nm,a,1.0,60\nm,b,1.0,60\n")
    curves = {(c.model, c.method): c for c in io.load_curves(p)}
    assert curves[("m", "a")].points == ((0.2, 50.0), (1.0, 60.0))
    for text in ("model,method,rho\nm,a,1.0\n", "model,method,rho,accuracy\nm,a,x,1\n",
                 "model,method,rho,accuracy\nm,a,0.5,1\n", "model,method,rho,accuracy\n"):
        p.write_text(text)
        with pytest.raises(FormatError):
            io.load_curves(p)


def test_shipped_table_is_complete():
    curves = io.load_curves(io.shipped_curves_path())
    assert len(curves) == 50
    for c in curves:
        assert [r for r, _ in c.points] == [0.2, 0.4, 0.6, 1.0]


def test_dump_json_is_stable():
    assert io.dump_json({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'
