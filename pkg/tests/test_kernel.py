import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpgc.base_kernels import BaseKernelSpec, gram
from gpgc.graph import Graph, normalize_adjacency, sandwich
from gpgc.kernel import (
    KernelConfig,
    angle_matrix,
    build_kernel,
    build_unit_kernel,
    initial_kernel,
    n_weight_layers,
    relu_layer,
)
from oracles import random_graph, random_psd, relu_moment_quadrature

EXACT = KernelConfig(delta_w=1.0)


class TestReluLayerClosedForm:
    def test_diagonal_halves_variance(self):
        out = relu_layer(EXACT, np.array([[2.0]]))
        assert abs(out[0, 0] - 1.0) <= 1e-12

    def test_orthogonal(self):
        out = relu_layer(EXACT, np.eye(2))
        assert abs(out[0, 1] - 1 / (2 * np.pi)) <= 1e-12
        assert out[0, 1] == pytest.approx(0.159155, abs=1e-6)

    def test_anticorrelated(self):
        out = relu_layer(EXACT, np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert abs(out[0, 1]) <= 1e-12

    def test_matches_quadrature(self, rng):
        for _ in range(10):
            theta = random_psd(rng, 4, rank=3)
            out = relu_layer(EXACT, theta)
            for m in range(4):
                for n in range(4):
                    ref = relu_moment_quadrature(theta[m, m], theta[n, n], theta[m, n])
                    assert out[m, n] == pytest.approx(ref, rel=1e-8, abs=1e-12)

    def test_pi_scaling_doubles(self, rng):
        theta = random_psd(rng, 5)
        pi_scaled = relu_layer(KernelConfig(delta_w=0.3, pi_scaling=True), theta)
        exact = relu_layer(KernelConfig(delta_w=0.6), theta)
        np.testing.assert_array_equal(pi_scaled, exact)

    def test_scaling_equivalence_does_not_compound(self, rng):
        # with two ReLU layers the factor-2 no longer maps to delta_w -> 2 delta_w
        a_hat = normalize_adjacency(random_graph(rng, 6, 0.4))
        x = rng.standard_normal((6, 3))
        pi_scaled = build_kernel(KernelConfig(variant="deep", n_layers=3, delta_w=0.3, pi_scaling=True), a_hat, x)
        exact = build_kernel(KernelConfig(variant="deep", n_layers=3, delta_w=0.6), a_hat, x)
        assert not np.allclose(pi_scaled, exact)

    def test_bias_variance_added(self):
        cfg = KernelConfig(bias_variance=0.25)
        out = relu_layer(cfg, np.eye(2))
        assert out[0, 1] == pytest.approx(0.25 + 1 / (2 * np.pi), abs=1e-15)

    def test_zero_variance_row(self):
        cfg = KernelConfig(bias_variance=0.1)
        theta = np.array([[0.0, 0.0], [0.0, 2.0]])
        out = relu_layer(cfg, theta)
        assert out[0, 0] == out[0, 1] == out[1, 0] == 0.1
        assert out[1, 1] == pytest.approx(1.1)
        assert angle_matrix(theta)[0, 1] == pytest.approx(np.pi / 2)

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError, match="negative variance"):
            relu_layer(EXACT, np.array([[-1.0]]))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1), c=st.floats(1e-3, 1e3))
def test_homogeneity_and_angle_invariance(n, seed, c):
    rng = np.random.default_rng(seed)
    theta = random_psd(rng, n)
    np.testing.assert_allclose(relu_layer(EXACT, c * theta), c * relu_layer(EXACT, theta), rtol=1e-10, atol=0)
    np.testing.assert_allclose(angle_matrix(c * theta), angle_matrix(theta), rtol=0, atol=1e-12)


def test_initial_kernel_zero_features(path3_hat):
    cfg = KernelConfig(base="inner_product")
    np.testing.assert_array_equal(initial_kernel(cfg, path3_hat, np.zeros((3, 2))), 0)


def test_initial_kernel_edgeless_is_gram(rng):
    a_hat = normalize_adjacency(Graph(5))
    x = rng.standard_normal((5, 3))
    for base in ["arccosine", "inner_product", {"kind": "se", "length_scale": 2.0}, "polynomial"]:
        cfg = KernelConfig(base=base)
        np.testing.assert_array_equal(initial_kernel(cfg, a_hat, x), gram(cfg.base, x))


def test_initial_kernel_path(path3_hat):
    cfg = KernelConfig(base="inner_product")
    theta = initial_kernel(cfg, path3_hat, np.array([[1.0], [0.0], [0.0]]))
    assert theta[0, 0] == pytest.approx(0.25, abs=1e-15)
    assert theta[0, 1] == pytest.approx(0.5 / np.sqrt(6), abs=1e-15)


def test_initial_kernel_scales_by_delta_and_bias(path3_hat, rng):
    x = rng.standard_normal((3, 2))
    base = initial_kernel(KernelConfig(base="arccosine"), path3_hat, x)
    other = initial_kernel(KernelConfig(base="arccosine", delta_w=0.3, bias_variance=0.2), path3_hat, x)
    np.testing.assert_allclose(other, 0.2 + 0.3 * base)


def test_big_equals_small_without_edges(rng):
    a_hat = normalize_adjacency(Graph(6))
    x = rng.standard_normal((6, 3))
    small = build_kernel(KernelConfig(variant="small"), a_hat, x)
    big = build_kernel(KernelConfig(variant="big"), a_hat, x)
    np.testing.assert_allclose(big, small, atol=1e-15)


@pytest.mark.parametrize("variant", ["small", "big", "deep"])
def test_zero_features_give_zero_kernel(variant, path3_hat):
    cfg = KernelConfig(variant=variant, n_layers=3, base="inner_product")
    np.testing.assert_array_equal(build_kernel(cfg, path3_hat, np.zeros((3, 2))), 0)


def test_table2_reference_config_builds(rng):
    cfg = KernelConfig(variant="big", delta_w=0.137, base="arccosine")
    a_hat = normalize_adjacency(random_graph(rng, 20, 0.2))
    k = build_kernel(cfg, a_hat, np.abs(rng.standard_normal((20, 6))))
    assert np.isfinite(k).all()


def test_big_is_sandwich_of_small(rng):
    for _ in range(10):
        n = int(rng.integers(2, 65))
        a_hat = normalize_adjacency(random_graph(rng, n, 0.1))
        x = rng.standard_normal((n, 4))
        for base in ["arccosine", "inner_product"]:
            small = build_kernel(KernelConfig(variant="small", base=base, delta_w=0.7), a_hat, x)
            big = build_kernel(KernelConfig(variant="big", base=base, delta_w=0.7), a_hat, x)
            np.testing.assert_allclose(big, sandwich(a_hat, small), rtol=0, atol=1e-12)


def test_deep_two_layers_is_big(rng):
    a_hat = normalize_adjacency(random_graph(rng, 10, 0.3))
    x = rng.standard_normal((10, 3))
    deep = build_kernel(KernelConfig(variant="deep", n_layers=2), a_hat, x)
    big = build_kernel(KernelConfig(variant="big"), a_hat, x)
    np.testing.assert_array_equal(deep, big)


def test_deep_one_layer_is_initial_kernel(rng):
    a_hat = normalize_adjacency(random_graph(rng, 10, 0.3))
    x = rng.standard_normal((10, 3))
    cfg = KernelConfig(variant="deep", n_layers=1)
    np.testing.assert_array_equal(build_kernel(cfg, a_hat, x), initial_kernel(cfg, a_hat, x))


@pytest.mark.parametrize("variant,layers", [("small", 2), ("big", 2), ("deep", 3)])
def test_unit_kernel_scaling(variant, layers, rng):
    a_hat = normalize_adjacency(random_graph(rng, 12, 0.3))
    x = rng.standard_normal((12, 3))
    cfg = KernelConfig(variant=variant, n_layers=layers, delta_w=0.37, base="arccosine")
    assert n_weight_layers(cfg) == layers
    np.testing.assert_allclose(
        build_kernel(cfg, a_hat, x), 0.37**layers * build_unit_kernel(cfg, a_hat, x), rtol=1e-12
    )
    with pytest.raises(ValueError):
        build_unit_kernel(cfg.replace(bias_variance=0.1), a_hat, x)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), variant=st.sampled_from(["small", "big", "deep"]))
def test_psd_preserved(seed, variant):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 33))
    a_hat = normalize_adjacency(random_graph(rng, n, rng.uniform(0, 0.4)))
    x = rng.standard_normal((n, int(rng.integers(1, 6))))
    for base in ["inner_product", "arccosine", {"kind": "se", "length_scale": 1.5}]:
        k = build_kernel(KernelConfig(variant=variant, n_layers=3, base=base), a_hat, x)
        eig = np.linalg.eigvalsh(k)
        assert eig.min() >= -1e-8 * max(eig.max(), 1e-300)
        assert np.abs(k - k.T).max() <= 1e-10


def test_config_json_round_trip():
    cfg = KernelConfig(variant="deep", n_layers=4, delta_w=0.2, base={"kind": "se", "length_scale": 3.0})
    assert KernelConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.digest() == KernelConfig.from_dict(cfg.to_dict()).digest()
    assert cfg.digest() == cfg.replace(sigma_tau_sq=5.0).digest()
    assert cfg.digest() != cfg.replace(delta_w=0.3).digest()


@pytest.mark.parametrize(
    "kwargs",
    [{"variant": "huge"}, {"delta_w": 0}, {"jitter": -1}, {"variant": "deep", "n_layers": 0}, {"sigma_tau_sq": -1}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        KernelConfig(**kwargs)
