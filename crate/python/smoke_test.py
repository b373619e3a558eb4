"""Smoke test for the Python bindings.

Build and install first:

    pip install maturin
    cd crates/python && maturin build --release -o dist && pip install dist/*.whl

Then run `python python/smoke_test.py` or `pytest python/smoke_test.py`.
"""

import json
import math

import spatial_reasoner as sr


def scene():
    fb = sr.FactBase()
    user = sr.SpatialObject("user", z=5.0, w=0.5, h=1.8, d=0.3, angle=math.pi)
    user.observer = True
    fb.add(user)
    fb.add(sr.SpatialObject("table", w=1.2, h=0.75, d=0.8, type="table"))
    fb.add(sr.SpatialObject("book", x=0.1, y=0.75, w=0.2, h=0.05, d=0.3, type="book"))
    fb.add(sr.SpatialObject("lamp", x=8.0, z=8.0, w=0.3, h=1.5, d=0.3, type="lamp"))
    return fb


def test_objects():
    fb = scene()
    assert len(fb) == 4
    table = fb.get("table")
    assert table.size == (1.2, 0.75, 0.8)
    assert abs(table.volume - 0.72) < 1e-9
    table.set("shape", "rectangular")
    assert table.get("shape") == "rectangular"
    assert fb.get("missing") is None


def test_deduce():
    fb = scene()
    fb.deduce(["adjacency"])
    triples = {(r.subject, r.predicate, r.object) for r in fb.relations()}
    assert ("book", "ontop", "table") in triples


def test_pipeline():
    fb = scene()
    result = fb.run("filter(type == 'table') | pick(ontop) | log()")
    assert result.objects == ["book"]
    assert len(result.chain) == 4
    step, kind, content = result.logs[0]
    assert (step, kind) == (3, "summary")
    assert content.startswith("1 object(s)")

    result = fb.run("isa(furniture)", taxonomy="furniture\ntable subClassOf furniture")
    assert result.objects == ["table"]

    result = fb.run("filter(id == 'table') | produce(copy : y = 2.0)")
    assert result.produced == ["copy1"]
    assert result.fact_base.get("copy1").position[1] == 2.0

    result = fb.run("calc(n = count(objects))")
    assert result.variables["n"] == 4.0


def test_errors():
    fb = scene()
    for bad in ["filter(", "isa(furniture)"]:
        try:
            fb.run(bad)
        except ValueError:
            pass
        else:
            raise AssertionError(f"{bad!r} should fail")


def test_io():
    fb = scene()
    doc = json.loads(fb.to_json())
    assert doc["version"] == "1"
    again = sr.FactBase.from_json(fb.to_json())
    assert [o.id for o in again.objects()] == ["user", "table", "book", "lamp"]
    assert sr.parse_pipeline("filter(volume>1)|log()") == "filter(volume > 1) | log()"
    fb.deduce(["adjacency"])
    assert "graph LR" in sr.export_mermaid(fb, ["ontop"])
    assert sr.export_scene(fb).count("\nv ") == 32


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
