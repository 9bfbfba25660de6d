"""Equivalence checks: sampling, exact region maps, interior filtering."""

import numpy as np
import pytest

from reluforge import (
    BoxDomain,
    DimensionMismatchError,
    IncompletePatternsError,
    Layer,
    Network,
    ParseError,
    ReportMismatchError,
    ShallowConfig,
    classify_units,
    shallow_full,
    shallow_patterns,
    stability_compression,
)
from reluforge.equiv import (
    EquivalenceReport,
    check_interior_filtered,
    check_region_exact,
    check_sampled,
)
from reluforge.regions import enumerate_patterns, exhaustive_lp_patterns

import oracles


def perturbed(net, layer=0, unit=0, delta=1.0):
    layers = list(net.layers)
    b = layers[layer].bias.copy()
    b[unit] += delta
    layers[layer] = Layer(layers[layer].weights, b, layers[layer].activation)
    return Network(tuple(layers), net.input_dim)


def compressed(net, dom):
    rep = classify_units(net, dom, mode="feasibility-first")
    out, _ = stability_compression(net, dom, rep)
    return out


# ---------------------------------------------------------------------------
# sampled
# ---------------------------------------------------------------------------


def test_sampled_self_is_exact():
    rng = np.random.default_rng(401)
    net = oracles.random_network(rng, [2, 3, 2])
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    rep = check_sampled(net, net, dom, n_samples=500, seed=7)
    assert rep.verdict == "pass"
    assert rep.max_abs_deviation == 0.0
    assert rep.max_rel_deviation == 0.0
    assert rep.samples == 500 and rep.failures == ()


def test_sampled_detects_bias_perturbation():
    rng = np.random.default_rng(403)
    net = oracles.random_network(rng, [2, 3, 2])
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    rep = check_sampled(net, perturbed(net, layer=-1), dom, n_samples=200, seed=7)
    assert rep.verdict == "fail"
    assert rep.max_abs_deviation >= 0.5
    assert rep.failures
    x, f1, f2 = rep.failures[0]
    assert len(x) == 2 and len(f1) == 2 and len(f2) == 2


def test_sampled_verdict_symmetric():
    rng = np.random.default_rng(409)
    net = oracles.random_network(rng, [2, 3, 1])
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    bad = perturbed(net, layer=-1)
    assert check_sampled(net, bad, dom, seed=3, n_samples=300).verdict == "fail"
    assert check_sampled(bad, net, dom, seed=3, n_samples=300).verdict == "fail"
    good = compressed(net, dom)
    assert check_sampled(net, good, dom, seed=3, n_samples=300).verdict == "pass"
    assert check_sampled(good, net, dom, seed=3, n_samples=300).verdict == "pass"


def test_sampled_is_deterministic_per_seed():
    rng = np.random.default_rng(419)
    net = oracles.random_network(rng, [2, 3, 1])
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    other = compressed(net, dom)
    a = check_sampled(net, other, dom, n_samples=400, seed=11)
    b = check_sampled(net, other, dom, n_samples=400, seed=11)
    assert a.max_abs_deviation == b.max_abs_deviation
    assert a.to_json() == b.to_json()


def test_sampled_compression_pipeline_passes():
    rng = np.random.default_rng(421)
    for _ in range(5):
        dom = BoxDomain.uniform(3, -1.0, 1.0)
        net, _ = oracles.bias_forced_net(rng, [3, 5, 4, 2], dom, folds_per_layer=1)
        rep = check_sampled(net, compressed(net, dom), dom, n_samples=2000, tol=1e-6)
        assert rep.verdict == "pass"


def test_dim_mismatch_rejected():
    rng = np.random.default_rng(431)
    a = oracles.random_network(rng, [2, 3, 1])
    b = oracles.random_network(rng, [3, 3, 1])
    with pytest.raises(DimensionMismatchError):
        check_sampled(a, b, BoxDomain.uniform(2, -1.0, 1.0))
    c = oracles.random_network(rng, [2, 3, 2])
    with pytest.raises(DimensionMismatchError):
        check_sampled(a, c, BoxDomain.uniform(2, -1.0, 1.0))


# ---------------------------------------------------------------------------
# region exact
# ---------------------------------------------------------------------------


def test_region_exact_compression_certificate():
    rng = np.random.default_rng(433)
    for _ in range(4):
        dom = BoxDomain.uniform(2, -1.0, 1.0)
        net, _ = oracles.bias_forced_net(rng, [2, 4, 3, 1], dom, folds_per_layer=1)
        ps = exhaustive_lp_patterns(net, dom)
        rep = check_region_exact(net, compressed(net, dom), dom, ps)
        assert rep.verdict == "pass"
        assert rep.samples == len(ps)
        assert rep.max_abs_deviation <= 1e-8


def test_region_exact_flags_scaled_outputs():
    rng = np.random.default_rng(439)
    net = oracles.random_network(rng, [2, 3, 1])
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    layers = list(net.layers)
    last = layers[-1]
    layers[-1] = Layer(last.weights * 2.0, last.bias * 2.0, last.activation)
    doubled = Network(tuple(layers), 2)
    ps = exhaustive_lp_patterns(net, dom)
    rep = check_region_exact(net, doubled, dom, ps)
    assert rep.verdict == "fail"
    assert len(rep.failures) == len(ps)  # wrong on every region


def test_region_exact_single_region_constant():
    w = np.array([[1.0, 0.0], [0.0, 1.0]])
    b = np.array([-10.0, -10.0])  # both units dead on the box
    net = Network(
        (Layer(w, b, "relu"), Layer(np.ones((1, 2)), np.array([0.25]), "identity")), 2
    )
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    ps = exhaustive_lp_patterns(net, dom)
    assert len(ps) == 1
    rep = check_region_exact(net, compressed(net, dom), dom, ps)
    assert rep.verdict == "pass"


def test_region_exact_requires_complete_matching_patterns():
    rng = np.random.default_rng(443)
    net = oracles.random_network(rng, [2, 3, 1])
    other = oracles.random_network(rng, [2, 3, 1])
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    ps = exhaustive_lp_patterns(other, dom)
    with pytest.raises(ReportMismatchError):
        check_region_exact(net, net, dom, ps)
    from dataclasses import replace

    with pytest.raises(IncompletePatternsError):
        check_region_exact(net, net, dom, replace(ps, complete=False))


def test_region_exact_pass_implies_sampled_pass():
    rng = np.random.default_rng(449)
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    net, _ = oracles.bias_forced_net(rng, [2, 4, 3, 1], dom)
    comp = compressed(net, dom)
    ps = exhaustive_lp_patterns(net, dom)
    assert check_region_exact(net, comp, dom, ps).verdict == "pass"
    for seed in (0, 99, 12345):
        assert check_sampled(net, comp, dom, n_samples=800, seed=seed).verdict == "pass"


# ---------------------------------------------------------------------------
# interior filtered
# ---------------------------------------------------------------------------


def test_filtered_passes_on_full_rewrite():
    rng = np.random.default_rng(457)
    net = oracles.random_network(rng, [2, 2, 1])
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    two = shallow_full(net, dom, ShallowConfig(epsilon=1e-3))
    rep = check_interior_filtered(
        net, two, dom, epsilon=1e-3, n_samples=2000, tol=1e-6, seed=5
    )
    assert rep.verdict == "pass"
    assert rep.acceptance_ratio >= 0.9


def test_filtered_passes_on_patterns_rewrite():
    rng = np.random.default_rng(461)
    net = oracles.random_network(rng, [2, 2, 2, 1])
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    rep_units = classify_units(net, dom, mode="feasibility-first")
    ps = enumerate_patterns(net, dom, rep_units)
    two = shallow_patterns(net, dom, ps, ShallowConfig(epsilon=1e-3))
    rep = check_interior_filtered(
        net, two, dom, epsilon=1e-3, n_samples=2000, tol=1e-6, seed=5
    )
    assert rep.verdict == "pass"
    assert rep.acceptance_ratio >= 0.9


def test_filtered_inconclusive_when_epsilon_swamps_domain():
    rng = np.random.default_rng(463)
    net = oracles.random_network(rng, [2, 3, 1])
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    rep = check_interior_filtered(net, net, dom, epsilon=100.0, n_samples=300)
    assert rep.verdict == "inconclusive"
    assert rep.acceptance_ratio == 0.0
    assert rep.samples == 0


def test_filtered_failures_still_detected():
    rng = np.random.default_rng(467)
    net = oracles.random_network(rng, [2, 3, 1])
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    rep = check_interior_filtered(
        net, perturbed(net, layer=-1), dom, epsilon=1e-4, n_samples=300
    )
    assert rep.verdict == "fail"


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------


def test_report_round_trip():
    rng = np.random.default_rng(479)
    net = oracles.random_network(rng, [2, 3, 1])
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    rep = check_sampled(net, perturbed(net, layer=-1), dom, n_samples=50)
    back = EquivalenceReport.from_json(rep.to_json())
    assert back == rep


def test_report_rejects_malformed():
    with pytest.raises(ParseError):
        EquivalenceReport.from_json("not json")
    with pytest.raises(ParseError):
        EquivalenceReport.from_json('{"format": "something-else", "version": 1}')
    with pytest.raises(ParseError):
        EquivalenceReport.from_json('{"format": "equivalence-report", "version": 9}')
