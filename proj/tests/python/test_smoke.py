import math

import pytest

import divexp


def chain():
    g = divexp.SocialGraph(3, [(0, 1), (1, 2)], [-0.5, 0.0, 0.5])
    items = divexp.ItemCatalog([-1.0, 1.0])
    return g, items


def test_diversity_level():
    assert divexp.diversity_level(0.0, []) == 0.0
    assert divexp.diversity_level(0.2, [-1.0, 0.5]) == pytest.approx(1.5)


def test_exact_score_on_certain_chain():
    g, items = chain()
    model = divexp.PropagationModel.linear(1.0)
    # Certain edges under WC: every node has in-degree at most one.
    wc = divexp.PropagationModel.weighted_cascade()
    score = divexp.exact_score(g, items, wc, [(0, 1)])
    assert score == pytest.approx(1.5 + 1.0 + 0.5)
    assert divexp.exact_score(g, items, model, []) == 0.0


def test_mc_matches_exact():
    g, items = chain()
    model = divexp.PropagationModel.exponential(0.5, 2.0)
    a = [(0, 1), (2, 0)]
    exact = divexp.exact_score(g, items, model, a)
    mean, se = divexp.mc_score(g, items, model, a, trials=20000, seed=3)
    assert abs(mean - exact) <= 5 * se + 1e-12


def test_rc_sample_estimates_score():
    g, items = chain()
    model = divexp.PropagationModel.linear(0.8)
    sample = divexp.RcSample(3, items, seed=11)
    sample.grow_to(50000, g, model)
    assert len(sample) == 50000
    a = [(0, 0), (1, 1)]
    est = 3 * sample.weight(a)
    assert est == pytest.approx(divexp.exact_score(g, items, model, a), abs=0.05)


def test_tdem_and_baselines():
    g = divexp.generate_synthetic(60, 400, polarized=True, homophily=0.5, seed=2)
    items = divexp.make_items(5)
    model = divexp.PropagationModel.exponential(0.25, 2.0)
    c = divexp.ConstraintSet(4, attention=1)
    pairs, trace = divexp.tdem(g, items, model, c, epsilon=0.3, seed=4)
    assert len(pairs) == 4
    assert len({u for u, _ in pairs}) == 4
    assert trace["sample_size"] > 0
    for fn in (divexp.baseline_close, divexp.baseline_far, divexp.baseline_weight):
        assert len(fn(g, items, c)) == 4


def test_lambda_and_log_binom():
    assert divexp.log_binom(500, 5) == pytest.approx(26.2654884812378735, rel=1e-12)
    assert divexp.lambda_bound(100, 5, 5, 0.2, 1.0) == pytest.approx(1304637.308375151, rel=1e-9)
    assert math.isfinite(divexp.lambda_bound(10, 2, 50, 0.2, 1.0))


def test_errors_are_typed():
    with pytest.raises(divexp.ValidationError):
        divexp.SocialGraph(2, [(0, 1)], [0.0, 3.0])
    with pytest.raises(divexp.Error):
        divexp.run_experiment({"no_such_key": "1"})
