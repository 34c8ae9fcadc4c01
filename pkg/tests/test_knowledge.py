import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import gaussian
from dkfis.dataset import PREDICTORS
from dkfis.errors import DegenerateColumn, InvalidSpec
from dkfis.knowledge import (
    PASS_THROUGH,
    ExpertRule,
    KnowledgeBase,
    OutputMemberships,
    categorize_nzs_nzb,
    default_knowledge_base,
    fit_output_memberships,
    fit_partition,
    load_knowledge_base,
    refine_class,
    refine_classes,
    refine_prediction,
    refine_predictions,
    rule_activation,
)

# a partition with round numbers; every term sigma is 10
TERMS = {p: {"low": (10.0, 10.0), "medium": (50.0, 10.0), "high": (90.0, 10.0)} for p in PREDICTORS}
OM = OutputMemberships(c_nzs=0.2, s_nzs=0.15, c_nzb=0.5, s_nzb=0.15)


@pytest.fixture
def kb():
    from dkfis.knowledge import LinguisticPartition
    return default_knowledge_base().with_partition(LinguisticPartition(TERMS))


def at_centers(rule):
    level = {"low": 10.0, "medium": 50.0, "high": 90.0}
    return np.array([level[rule.antecedent[p]] for p in PREDICTORS])


def rule(kb, name):
    return next(r for r in kb.rules if r.name == name)


def test_shipped_rules():
    kb = default_knowledge_base()
    got = {r.name: (tuple(r.antecedent[p] for p in PREDICTORS), r.consequent) for r in kb.rules}
    assert got == {
        "R1": (("high", "low", "high", "high"), "low"),
        "R2": (("high", "high", "high", "low"), "low"),
        "R3": (("low", "medium", "low", "low"), "high"),
    }
    assert kb.activation_threshold == 0.5 and kb.allow_promotion


def test_rule_validation():
    with pytest.raises(InvalidSpec):
        ExpertRule("bad", {"gamma_ray": "low"}, "high")
    with pytest.raises(InvalidSpec):
        ExpertRule("bad", {p: "huge" for p in PREDICTORS}, "high")
    with pytest.raises(InvalidSpec):
        KnowledgeBase([], activation_threshold=0.5)


def test_knowledge_base_file_round_trip(tmp_path, kb):
    import json
    path = tmp_path / "kb.json"
    path.write_text(json.dumps(kb.to_dict()))
    back = load_knowledge_base(path)
    assert back.to_dict() == kb.to_dict()


def test_partition_on_uniform_column():
    col = np.arange(0.0, 101.0)
    X = np.column_stack([col, col * 2 + 1, col / 10, col + 5])
    part = fit_partition(X)
    c = part.terms["gamma_ray"]
    assert [c[lv][0] for lv in ("low", "medium", "high")] == [10.0, 50.0, 90.0]
    assert [c[lv][1] for lv in ("low", "medium", "high")] == [20.0, 20.0, 20.0]
    # affine equivariance of the centers
    r = part.terms["resistivity"]
    assert [r[lv][0] for lv in ("low", "medium", "high")] == pytest.approx([21.0, 101.0, 181.0])


def test_partition_degenerate_and_override():
    X = np.column_stack([np.arange(10.0), np.ones(10), np.arange(10.0), np.arange(10.0)])
    with pytest.raises(DegenerateColumn):
        fit_partition(X)
    X[:, 1] = np.arange(10.0)
    part = fit_partition(X, {"density": {"high": (100.0, 3.0)}})
    assert part.terms["density"]["high"] == (100.0, 3.0)


def test_activation_at_centers_and_min(kb):
    r3 = rule(kb, "R3")
    x = at_centers(r3)
    acts = rule_activation(kb, x)
    assert acts[[r.name for r in kb.rules].index("R3")] == 1.0
    # move clay to a grade of 0.2 under "low": |dx| = sigma * sqrt(2 ln 5)
    x2 = x.copy()
    x2[3] += 10.0 * np.sqrt(2.0 * np.log(5.0))
    assert rule_activation(kb, x2)[2] == pytest.approx(0.2, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 150), min_size=4, max_size=4))
def test_activation_matches_independent_gaussians(x):
    from dkfis.knowledge import LinguisticPartition
    kb = default_knowledge_base().with_partition(LinguisticPartition(TERMS))
    acts = rule_activation(kb, np.array(x))
    for k, r in enumerate(kb.rules):
        ref = min(gaussian(x[j], *TERMS[p][r.antecedent[p]]) for j, p in enumerate(PREDICTORS))
        assert abs(acts[k] - ref) < 1e-12


def test_refine_class_examples(kb):
    assert refine_class(kb, at_centers(rule(kb, "R1")), 1) == (0, "R1")
    assert refine_class(kb, at_centers(rule(kb, "R2")), 1) == (0, "R2")
    assert refine_class(kb, at_centers(rule(kb, "R3")), 0) == (1, "R3")
    far = np.array([200.0, 200.0, 200.0, 200.0])
    assert refine_class(kb, far, 1) == (1, PASS_THROUGH)
    # a rule agreeing with the label is not an action
    assert refine_class(kb, at_centers(rule(kb, "R3")), 1) == (1, PASS_THROUGH)


def test_promotion_can_be_disabled(kb):
    kb2 = KnowledgeBase(kb.rules, kb.partition, kb.activation_threshold, allow_promotion=False)
    assert refine_class(kb2, at_centers(rule(kb, "R3")), 0) == (0, PASS_THROUGH)
    assert refine_class(kb2, at_centers(rule(kb, "R1")), 1) == (0, "R1")


def test_output_memberships_fit():
    om = fit_output_memberships([0.1, 0.5])
    assert (om.c_nzs, om.c_nzb, om.s_nzs, om.s_nzb) == (0.1, 0.5, 0.2, 0.2)
    s = np.linspace(0.0, 0.86, 100_001)[1:]
    om = fit_output_memberships(s)
    assert om.c_nzs == pytest.approx(0.215, abs=1e-4)
    assert om.c_nzb == pytest.approx(0.645, abs=1e-4)
    with pytest.raises(DegenerateColumn):
        fit_output_memberships([0.3, 0.3, 0.3])


def test_categorize():
    assert categorize_nzs_nzb(OM, 0.2)[0] == "NZS"
    assert categorize_nzs_nzb(OM, 0.5)[0] == "NZB"
    # centers whose midpoint is exact in binary, so the grades tie exactly
    om = OutputMemberships(0.25, 0.1, 0.75, 0.1)
    cat, gs, gb = categorize_nzs_nzb(om, 0.5)
    assert cat == "NZS" and gs == gb


def test_refine_prediction_examples(kb):
    far = np.array([200.0, 200.0, 200.0, 200.0])
    v = 0.123456789
    out, why = refine_prediction(kb, OM, far, v)
    assert out is v and why == PASS_THROUGH
    out, why = refine_prediction(kb, OM, at_centers(rule(kb, "R1")), 0.7)
    assert out == pytest.approx(OM.c_nzs, abs=1e-12) and why == "R1"
    out, why = refine_prediction(kb, OM, at_centers(rule(kb, "R3")), OM.c_nzs)
    assert out == pytest.approx((OM.c_nzs + OM.c_nzb) / 2, abs=1e-12) and why == "R3"


def test_both_groups_firing():
    from dkfis.knowledge import LinguisticPartition
    # terms wide enough that R1, R2 and R3 all fire at activation ~1
    wide = {p: {"low": (0.0, 1e3), "medium": (1.0, 1e3), "high": (2.0, 1e3)} for p in PREDICTORS}
    kb = default_knowledge_base().with_partition(LinguisticPartition(wide))
    acts = rule_activation(kb, np.ones(4))
    assert (acts > 0.99).all()
    out, why = refine_predictions(kb, OM, np.ones((1, 4)), [0.9])
    assert why[0] == "R1+R3"
    assert OM.c_nzs < out[0] < OM.c_nzb


def random_kb(rng, tau):
    from dkfis.knowledge import LinguisticPartition
    return KnowledgeBase(default_knowledge_base().rules, LinguisticPartition(TERMS), tau)


@settings(max_examples=300, deadline=None)
@given(x=st.lists(st.floats(-20, 120), min_size=4, max_size=4),
       s=st.floats(-0.5, 1.5), label=st.sampled_from([0, 1]))
def test_refinement_range_and_bounds(x, s, label):
    kb = random_kb(None, 0.5)
    out, why = refine_prediction(kb, OM, np.array(x), s)
    if why == PASS_THROUGH:
        assert out == s
    else:
        assert 1e-6 <= out <= 1.0
        if "degenerate" not in why:
            assert OM.c_nzs - 1e-12 <= out <= OM.c_nzb + 1e-12
    new_label, reason = refine_class(kb, np.array(x), label)
    assert (new_label == label) == (reason == PASS_THROUGH)


@settings(max_examples=200, deadline=None)
@given(s=st.floats(0.0, 1.0), a=st.floats(0.51, 1.0), b=st.floats(0.51, 1.0))
def test_defuzzified_value_is_monotone_in_activation(s, a, b):
    # place the pattern so that only the "low" group or only the "high" group fires
    from dkfis.knowledge import LinguisticPartition
    lo, hi = sorted((a, b))
    kb = KnowledgeBase(default_knowledge_base().rules, LinguisticPartition(TERMS), 0.5)

    def r1_point(act):
        x = at_centers(rule(kb, "R1"))
        x[0] -= 10.0 * np.sqrt(-2.0 * np.log(act))  # gamma grade under "high" = act
        return x

    def r3_point(act):
        x = at_centers(rule(kb, "R3"))
        x[0] += 10.0 * np.sqrt(-2.0 * np.log(act))
        return x

    v_lo = refine_predictions(kb, OM, r1_point(lo)[None], [s])[0][0]
    v_hi = refine_predictions(kb, OM, r1_point(hi)[None], [s])[0][0]
    assert v_hi <= v_lo + 1e-12
    v_lo = refine_predictions(kb, OM, r3_point(lo)[None], [s])[0][0]
    v_hi = refine_predictions(kb, OM, r3_point(hi)[None], [s])[0][0]
    assert v_hi >= v_lo - 1e-12


@settings(max_examples=300, deadline=None)
@given(x=st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4),
       s=st.floats(-1.0, 2.0), label=st.sampled_from([0, 1]))
def test_tau_one_is_identity(x, s, label):
    kb = random_kb(None, 1.0)
    raw = np.array(x)
    out, why = refine_prediction(kb, OM, raw, s)
    assert out is s and why == PASS_THROUGH
    assert refine_class(kb, raw, label) == (label, PASS_THROUGH)
    labels = np.array([label])
    assert refine_classes(kb, raw[None], labels)[0].tolist() == [label]
