import pytest

from herrlab.errors import DualityMismatch, NotStabilized, ValidationError, WindowTooLarge
from herrlab.local_ring import make_ring, qp_params
from herrlab.lubin_tate import default_frobenius
from herrlab.pipeline import (CohomologyReport, PipelineConfig, build_module, duality_from_reports, h0_fast,
                              herr_level, iwasawa_sequence, level_transition, max_cells, neumann_inverse, phi_herr,
                              verify_exactness_lemmas)
from herrlab.series import LaurentTrunc, phi_substitute


@pytest.fixture(scope="module")
def trivial_report():
    return phi_herr(PipelineConfig.builtin("cyclotomic-Q3-trivial"))


def test_trivial_mod_3(trivial_report):
    assert trivial_report.stabilized
    assert trivial_report.exponents() == [(1,), (1, 1), ()]
    assert trivial_report.orders() == [3, 9, 1]
    assert trivial_report.to_json()["config"]["case"] == "cyclotomic-Q3-trivial"


def test_h0_fast_matches_invariants():
    triv = build_module(PipelineConfig.builtin("cyclotomic-Q3-trivial", m=2))
    assert h0_fast(triv, 3, 3).exponents == (2,)
    tw = build_module(PipelineConfig.builtin("cyclotomic-Q3-chiLT"))
    assert h0_fast(tw, 3, 3).exponents == ()


def test_short_schedule_reports_not_stabilized():
    cfg = PipelineConfig.builtin("cyclotomic-Q3-trivial", N_levels=(1, 2, 3), n_levels=(1, 2, 3))
    rep = phi_herr(cfg, raise_on_failure=False)
    assert rep.outcome == "NotStabilized"
    assert rep.traces
    with pytest.raises(NotStabilized) as err:
        phi_herr(cfg)
    assert err.value.traces


def test_level_transitions_are_chain_maps():
    mod = build_module(PipelineConfig.builtin("cyclotomic-Q3-trivial"))
    a, b = herr_level(mod, 2, 2), herr_level(mod, 3, 2)
    maps = level_transition(a, b)
    assert len(maps) == len(a.complex.orders)


def test_cell_cap(monkeypatch):
    monkeypatch.setenv("HERRLAB_MAX_CELLS", "10")
    assert max_cells() == 10
    mod = build_module(PipelineConfig.builtin("cyclotomic-Q3-trivial"))
    with pytest.raises(WindowTooLarge):
        herr_level(mod, 5, 5)
    monkeypatch.setenv("HERRLAB_MAX_CELLS", "lots")
    with pytest.raises(ValidationError):
        max_cells()
    monkeypatch.delenv("HERRLAB_MAX_CELLS")
    assert max_cells() == 200_000


def test_config_validation():
    with pytest.raises(ValidationError):
        PipelineConfig.builtin("cyclotomic-Q3-trivial", m=0)
    with pytest.raises(ValidationError):
        PipelineConfig.builtin("cyclotomic-Q3-trivial", n_levels=(3, 2))
    with pytest.raises(ValidationError):
        PipelineConfig.builtin("no-such-case")


def test_echo_excludes_workers():
    a = PipelineConfig.builtin("cyclotomic-Q3-trivial", workers=1).echo()
    b = PipelineConfig.builtin("cyclotomic-Q3-trivial", workers=8).echo()
    assert a == b


def test_iwasawa_h2_and_warning():
    cfg = PipelineConfig.builtin("cyclotomic-Q3-trivial")
    rep = iwasawa_sequence(cfg)
    h2 = rep.degrees[1]
    assert h2["degree"] == 2 and h2["exponents"] == [1]
    assert all(c["holds"] for c in rep.traces["consistency"])
    assert rep.warnings == []
    lt = iwasawa_sequence(PipelineConfig.builtin("standardLT-Q3-trivial"))
    assert any("twist" in w for w in lt.warnings)


def test_lemma_suite_passes():
    rep = verify_exactness_lemmas(qp_params(3), "standard", (1,), n_max=4, N_max=20)
    assert rep.passed and rep.checks


def test_neumann_inverse_solves_fr_minus_one():
    ctx = make_ring(qp_params(3), 2)
    frob = default_frobenius(ctx, "standard")
    alpha = LaurentTrunc.from_ints(ctx, [1, 2, 0, 1], 2, 30)
    beta, terms = neumann_inverse(alpha, frob, 12)
    residual = (phi_substitute(beta, frob, 12) - beta - alpha).truncate(12)
    assert residual.is_zero() and terms >= 2


def _fake(orders_exps):
    degrees = [{"degree": i, "exponents": list(e), "kind": "Stabilized"} for i, e in enumerate(orders_exps)]
    return CohomologyReport("phi_herr", 3, degrees, "Stabilized", {})


def test_duality_from_reports():
    ok = duality_from_reports(_fake([(1,), (1, 1), ()]), _fake([(), (1, 1), (1,)]))
    assert ok.passed and ok.orders_a == [3, 9, 1]
    with pytest.raises(DualityMismatch):
        duality_from_reports(_fake([(1,), (1, 1), ()]), _fake([(1,), (1, 1), ()]))
