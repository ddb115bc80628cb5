import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bdrigid._validation import PreconditionError
from bdrigid.gh import (
    ApproximationCertificate,
    certify_approximation,
    directed_hausdorff,
    gh_lower_bound_diameter,
    graph_diameter_lower,
    hausdorff_distance,
    point_set_diameter,
)

point_sets = arrays(np.float64, st.tuples(st.integers(1, 12), st.just(2)), elements=st.floats(-10, 10))


def pairwise(p):
    return np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)


def test_identity_certificate():
    p = np.random.default_rng(0).random((30, 2))
    cert = certify_approximation(p, p, pairwise(p))
    assert cert.eps == 0 and cert.gh_upper == 0


def test_two_point_example():
    images = np.array([[0.0, 0.0], [1.2, 0.0]])
    cert = certify_approximation(images, images, np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert cert.eps_distortion == pytest.approx(0.2)
    assert cert.gh_upper == pytest.approx(0.4)


@given(point_sets, point_sets)
def test_certificate_identity(images, net):
    d = pairwise(images) * 1.1
    cert = certify_approximation(images, net, d)
    assert cert.gh_upper == 2 * max(cert.eps_distortion, cert.eps_net)
    assert cert.eps == max(cert.eps_distortion, cert.eps_net)


def test_callable_distances_match_matrix():
    p = np.random.default_rng(1).random((40, 2))
    d = pairwise(p) + 0.01
    a = certify_approximation(p, p, d)
    b = certify_approximation(p, p, lambda src: d[src])
    assert a == b


def test_sampled_pairs_are_seeded_and_monotone():
    rng = np.random.default_rng(2)
    p = rng.random((300, 2))
    d = pairwise(p) * (1 + 0.1 * rng.random((300, 300)))
    small = certify_approximation(p, p, d, exhaustive_limit=100, pair_budget=3000, seed=5)
    again = certify_approximation(p, p, d, exhaustive_limit=100, pair_budget=3000, seed=5)
    full = certify_approximation(p, p, d)
    assert small == again
    assert small.pair_sampling == "sources" and full.pair_sampling == "all"
    assert small.n_pairs == 10 * 300
    assert small.eps_distortion <= full.eps_distortion


def test_larger_net_never_increases_eps_net():
    rng = np.random.default_rng(3)
    images = rng.random((50, 2))
    net = rng.random((20, 2))
    bigger = np.vstack([net, images[:10]])
    d = pairwise(images)
    assert certify_approximation(images, bigger, d).eps_net <= certify_approximation(images, net, d).eps_net


def test_empty_inputs_rejected():
    with pytest.raises(PreconditionError):
        certify_approximation(np.zeros((0, 2)), np.zeros((3, 2)), np.zeros((0, 0)))
    with pytest.raises(PreconditionError):
        hausdorff_distance(np.zeros((0, 2)), np.zeros((3, 2)))


def test_distance_shape_checked():
    p = np.zeros((3, 2))
    with pytest.raises(PreconditionError):
        certify_approximation(p, p, np.zeros((2, 2)))


def test_certificate_json_round_trip(tmp_path):
    p = np.random.default_rng(4).random((10, 2))
    cert = certify_approximation(p, p, pairwise(p) + 0.1, net_slack=0.01)
    text = cert.to_json(tmp_path / "c.json")
    assert ApproximationCertificate.from_json(text) == cert
    assert ApproximationCertificate.from_json((tmp_path / "c.json").read_text()) == cert


def test_hausdorff_examples():
    assert hausdorff_distance([[0, 0]], [[3, 4]]) == 5
    g = np.stack(np.meshgrid(np.arange(5.0), np.arange(5.0)), -1).reshape(-1, 2)
    assert hausdorff_distance(g, g) == 0
    assert hausdorff_distance(g, g + (0.1, 0)) == pytest.approx(0.1)


@given(point_sets, point_sets, point_sets)
@settings(max_examples=50)
def test_hausdorff_is_a_metric(p, q, r):
    assert hausdorff_distance(p, p) == 0
    assert hausdorff_distance(p, q) == hausdorff_distance(q, p)
    assert hausdorff_distance(p, r) <= hausdorff_distance(p, q) + hausdorff_distance(q, r) + 1e-9


@given(point_sets, point_sets)
def test_directed_is_below_symmetric(p, q):
    assert directed_hausdorff(p, q) <= hausdorff_distance(p, q)


def test_lower_bound_examples():
    d = np.array([[0.0, 2.0], [2.0, 0.0]])
    assert gh_lower_bound_diameter(d, d) == 0
    assert gh_lower_bound_diameter(d, np.zeros((1, 1))) == 1
    assert gh_lower_bound_diameter(4.0, 2.0) == 1


def test_lower_bound_rejects_non_square():
    with pytest.raises(PreconditionError):
        gh_lower_bound_diameter(np.zeros((2, 3)), 1.0)


@given(point_sets)
def test_point_set_diameter_matches_brute_force(p):
    assert point_set_diameter(p) == pytest.approx(pairwise(p).max(), abs=1e-12)


def test_graph_diameter_lower_on_path():
    n = 10
    d = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)
    assert graph_diameter_lower(lambda src: d[src], start=4) == n - 1


def test_lower_bound_below_upper_bound():
    rng = np.random.default_rng(5)
    p = rng.random((60, 2))
    d = pairwise(p) * 1.3
    cert = certify_approximation(p, p, d)
    assert gh_lower_bound_diameter(d, point_set_diameter(p)) <= cert.gh_upper
    assert math.isfinite(cert.gh_upper)
