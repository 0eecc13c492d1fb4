import json

import numpy as np
import pytest

from shadowlab import cli
from shadowlab.constructions import config_scene, construct_remark1, construct_theorem2
from shadowlab.errors import (ConstructionError, DegenerateBodyError, EscapeNotFoundError, InconclusiveDistanceError,
                              InputError, ResourceError, SearchFailedError, ShadowLabError)
from shadowlab.scene import save_scene, strip_timings


@pytest.fixture
def t2(tmp_path):
    p = tmp_path / "t2.json"
    save_scene(construct_theorem2(0.05, 1e-3), p)
    return p


@pytest.fixture
def r1(tmp_path):
    p = tmp_path / "r1.json"
    save_scene(construct_remark1(), p)
    return p


def run(*args):
    return cli.main([str(a) for a in args])


def report(path):
    return json.loads(path.read_text())


def test_construct_writes_a_scene(tmp_path):
    out = tmp_path / "s.json"
    assert run("construct", "theorem2", "--eps", "0.05", "-o", out) == 0
    sc = report(out)
    assert sc["schema_version"] == "1" and len(sc["bodies"]) == 3


def test_verify_covered_is_zero(t2, tmp_path):
    out = tmp_path / "rep.json"
    assert run("verify", t2, "-o", out) == 0
    rep = report(out)
    assert rep["verdict"] == "covered" and rep["slack"] > 0 and "witness" not in rep


def test_verify_uncovered_is_one(tmp_path):
    sc = construct_theorem2(0.05, 1e-3)
    p = tmp_path / "one.json"
    save_scene(sc.with_bodies(sc.bodies[:1]), p)
    out = tmp_path / "rep.json"
    assert run("verify", p, "-o", out) == 1
    rep = report(out)
    assert rep["verdict"] == "uncovered" and len(rep["witness"]) == 2


def test_verify_inconclusive_is_two(tmp_path):
    p = tmp_path / "c.json"
    save_scene(construct_remark1("center"), p)
    out = tmp_path / "rep.json"
    assert run("verify", p, "--delta-min", "1e-2", "-o", out) == 2
    assert report(out)["verdict"] == "inconclusive"


def test_falsify_without_witness_is_two(t2, tmp_path):
    out = tmp_path / "rep.json"
    assert run("falsify", t2, "--samples", "2000", "-o", out) == 2
    assert report(out)["verdict"] == "no-witness"


def test_falsify_with_witness_is_zero(tmp_path):
    p = tmp_path / "open.json"
    save_scene(construct_remark1(open_balls=True), p)
    out = tmp_path / "rep.json"
    assert run("falsify", p, "-o", out) == 0
    rep = report(out)
    assert rep["verdict"] == "uncovered"
    assert np.linalg.norm(rep["witness"]) == pytest.approx(1.0)


def test_escape_lists_margins(tmp_path, capsys):
    C = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]])
    p = tmp_path / "fam.json"
    save_scene(config_scene(C, np.array([0.3, 0.3, 0.3]), "fam"), p)
    out = tmp_path / "rep.json"
    assert run("escape", p, "--point", "0.1,0.1,0.1", "-o", out) == 0
    rep = report(out)
    assert len(rep["ray_margins"]) == 3 and min(rep["ray_margins"]) > 0
    assert "ball 2: ray margin" in capsys.readouterr().err


def test_render_twice_is_byte_identical(r1, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    assert run("render", r1, "--projection", "0,2", "-o", a) == 0
    assert run("render", r1, "--projection", "0,2", "-o", b) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_reports_are_deterministic(t2, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("verify", t2, "--seed", "4", "-o", a)
    run("verify", t2, "--seed", "4", "-o", b)
    assert strip_timings(report(a)) == strip_timings(report(b))


# --- exit codes on real failures ------------------------------------------------


def test_bad_projection_is_three(r1, tmp_path):
    assert run("render", r1, "--projection", "0,7", "-o", tmp_path / "x.svg") == 3


def test_missing_file_is_three(tmp_path):
    assert run("verify", tmp_path / "missing.json") == 3


def test_malformed_scene_is_three(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"schema_version": "1", "space": {"kind": "real", "dim": 2}, "pointz": []}')
    assert run("verify", p) == 3


def test_usage_error_is_three():
    assert run("frobnicate") == 3
    assert run("verify") == 3


def test_missing_data_is_four(tmp_path):
    assert run("construct", "theorem4", "--n", "4", "--field", "quaternion", "-o", tmp_path / "x.json") == 4


def test_failed_search_is_four(tmp_path):
    assert run("search", "--dim", "2", "--count", "1", "--starts", "2", "-o", tmp_path / "x.json") == 4


# --- the exit-code table, one class at a time -------------------------------------


@pytest.mark.parametrize("exc,code", [
    (InputError("x"), 3),
    (DegenerateBodyError("x"), 3),
    (InconclusiveDistanceError("x", 0.0, 1.0), 2),
    (ConstructionError("x"), 4),
    (SearchFailedError("x"), 4),
    (EscapeNotFoundError("x"), 2),
    (ResourceError("x"), 5),
    (ShadowLabError("x"), 1),
])
def test_each_error_class_maps_to_its_exit_code(exc, code, t2, monkeypatch, capsys):
    def boom(*a, **k):
        raise exc

    monkeypatch.setattr(cli, "_verify", boom)
    assert run("verify", t2) == code
    assert "error: x" in capsys.readouterr().err


# --- seeds ------------------------------------------------------------------------


def test_seed_env_is_used_and_flag_wins(t2, tmp_path, monkeypatch):
    out = tmp_path / "rep.json"
    monkeypatch.setenv("SHADOWLAB_SEED", "17")
    run("verify", t2, "-o", out)
    assert report(out)["seed"] == 17
    run("verify", t2, "--seed", "3", "-o", out)
    assert report(out)["seed"] == 3


def test_seed_defaults_to_zero(t2, tmp_path, monkeypatch):
    monkeypatch.delenv("SHADOWLAB_SEED", raising=False)
    out = tmp_path / "rep.json"
    run("verify", t2, "-o", out)
    assert report(out)["seed"] == 0


def test_bad_seed_env_is_three(t2, monkeypatch):
    monkeypatch.setenv("SHADOWLAB_SEED", "abc")
    assert run("verify", t2) == 3
