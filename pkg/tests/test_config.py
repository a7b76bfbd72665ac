import textwrap

import pytest

from herrlab.config import config_hash, parse_config, parse_config_text
from herrlab.errors import ParseError, ValidationError
from herrlab.pipeline import build_module


def parse(text):
    return parse_config_text(textwrap.dedent(text).lstrip())


def test_minimal_builtin_fills_defaults():
    cfg, _ = parse("""
        [run]
        builtin = cyclotomic-Q3-chiLT
        """)
    assert cfg.case == "cyclotomic-Q3-chiLT" and cfg.m == 1 and cfg.window == 3
    assert cfg.twist == "chiLT" and cfg.N_levels == tuple(range(1, 9))


def test_overrides_and_schedule():
    cfg, raw = parse("""
        [run]
        builtin = cyclotomic-Q3-trivial
        m = 2
        workers = 4

        [schedule]
        N = 1, 2, 3, 4, 5, 6
        n = 1 2 3 4 5 6

        [lemmas]
        n_max = 5
        """)
    assert cfg.m == 2 and cfg.workers == 4
    assert cfg.N_levels == (1, 2, 3, 4, 5, 6) == cfg.n_levels
    assert raw.int("lemmas", "n_max") == 5


def test_unknown_key_has_location():
    with pytest.raises(ParseError) as err:
        parse("""
            [run]
            builtin = cyclotomic-Q3-trivial
            colour = blue
            """)
    assert (err.value.line, err.value.column) == (3, 10)


def test_unknown_section_and_garbage_lines():
    with pytest.raises(ParseError) as err:
        parse("""
            [output]
            path = x
            """)
    assert err.value.line == 1
    with pytest.raises(ParseError) as err:
        parse("m = 1\n")
    assert err.value.line == 1
    with pytest.raises(ParseError):
        parse("""
            [run]
            m = one
            """)


def test_p_equal_two_is_rejected():
    with pytest.raises(ValidationError):
        parse("""
            [field]
            p = 2
            f = 1
            e = 1
            defining_poly = 0, 1
            pi = 2
            """)


def test_malformed_series_literal_has_location():
    cfg, _ = parse("""
        [run]
        builtin = cyclotomic-Q3-trivial

        [frobenius]
        series = [(1, 3), (3 1)]
        """)
    with pytest.raises(ParseError) as err:
        build_module(cfg)
    assert err.value.line == 5
    assert err.value.column == 19


def test_custom_frobenius_series():
    cfg, _ = parse("""
        [run]
        builtin = cyclotomic-Q3-trivial

        [frobenius]
        series = [(1, 3), (3, 1)]
        """)
    mod = build_module(cfg)
    assert mod.frob.kind == "custom"
    assert mod.frob.series.coef(3) == mod.ctx.one()


def test_matrix_module_from_config():
    cfg, _ = parse("""
        [run]
        builtin = cyclotomic-Q3-trivial

        [module]
        rank = 2
        phi[0][0] = [(0, 1)]
        phi[1][1] = [(0, -1)]
        """)
    mod = build_module(cfg)
    assert mod.rank == 2 and mod.Phi[1][1].coef(0) == mod.ctx.from_int(-1)
    with pytest.raises(ValidationError):
        parse("""
            [module]
            rank = 1
            phi[1][0] = [(0, 1)]
            """)


def test_generators_section():
    cfg, _ = parse("""
        [run]
        builtin = cyclotomic-Q3-trivial

        [generators]
        gammas = 4
        deltas = -1:2
        """)
    assert cfg.gammas == [4] and cfg.deltas == [(-1, 2)]
    with pytest.raises(ParseError):
        parse("""
            [generators]
            deltas = -1
            """)


def test_hash_is_stable_and_ignores_workers():
    a, _ = parse("[run]\nbuiltin = cyclotomic-Q3-trivial\nworkers = 1\n")
    b, _ = parse("[run]\nworkers = 8\nbuiltin = cyclotomic-Q3-trivial\n")
    c, _ = parse("[run]\nbuiltin = cyclotomic-Q3-trivial\nm = 2\n")
    assert config_hash(a) == config_hash(b) != config_hash(c)


def test_missing_file(tmp_path):
    with pytest.raises(ValidationError):
        parse_config(tmp_path / "absent.cfg")
