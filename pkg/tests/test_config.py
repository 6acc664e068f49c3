import os
from fractions import Fraction

import pytest

from hida_interp import cache
from hida_interp.config import RunConfig, format_config, load_config, parse_config
from hida_interp.exact_arith import CyclotomicNumber


def test_defaults_and_validation():
    cfg = RunConfig()
    assert (cfg.digits, cfg.prec, cfg.orientation) == (20, 20, "standard")
    for bad in ({"digits": 10}, {"prec": 3}, {"orientation": "left"}):
        with pytest.raises(ValueError):
            RunConfig(**bad)


def test_parse_and_round_trip(tmp_path):
    cfg = parse_config("# comment\ndigits = 30\norientation = reversed  # trailing\n")
    assert cfg.digits == 30 and cfg.orientation == "reversed" and cfg.prec == 20
    assert parse_config(format_config(cfg)) == cfg
    path = tmp_path / "run.cfg"
    path.write_text("prec = 8\n")
    assert load_config(str(path), cfg) == cfg.updated(prec=8)
    with pytest.raises(ValueError):
        parse_config("speed = 3\n")
    with pytest.raises(ValueError):
        parse_config("digits 30\n")


def test_updated_ignores_none():
    cfg = RunConfig(digits=25)
    assert cfg.updated(digits=None, prec=12) == RunConfig(digits=25, prec=12)


def test_apply_sets_cache_env(tmp_path, monkeypatch):
    monkeypatch.delenv(cache.ENV_VAR, raising=False)
    target = tmp_path / "c"
    RunConfig(cache_dir=str(target)).apply()
    assert os.environ[cache.ENV_VAR] == str(target) and target.is_dir()
    assert RunConfig.from_env().cache_dir == str(target)


def test_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv(cache.ENV_VAR, str(tmp_path))
    z = CyclotomicNumber.from_exponents(3, {1: Fraction(1, 2)})
    cache.save_matrix(("cf", 1), [[z, 1], [0, -z]])
    rows = cache.load_matrix(("cf", 1), "CF")
    assert rows[0][0] == z and rows[1][1] == -z and rows[0][1] == 1
    cache.save_matrix(("qq", 2), [[Fraction(3, 4), -2]])
    assert cache.load_matrix(("qq", 2), "QQ") == [[Fraction(3, 4), -2]]
    assert cache.load_matrix(("missing",), "QQ") is None
    assert not [n for n in os.listdir(tmp_path) if n.endswith(".tmp")]


def test_cache_disabled(monkeypatch):
    monkeypatch.delenv(cache.ENV_VAR, raising=False)
    cache.save_matrix(("x",), [[1]])
    assert cache.load_matrix(("x",), "ZZ") is None
