import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpgc.base_kernels import BaseKernelSpec, cosine_similarity, gram
from gpgc.exceptions import KernelError


def test_arccosine_self_is_one():
    k = gram(BaseKernelSpec("arccosine"), np.array([[0.3, -2.0, 5.0]]))
    assert k[0, 0] == 1.0


def test_arccosine_orthogonal_is_half():
    k = gram(BaseKernelSpec("arccosine"), np.array([[1.0, 0.0], [0.0, 3.0]]))
    assert k[0, 1] == pytest.approx(0.5, abs=1e-15)


def test_se_unit_vectors():
    k = gram(BaseKernelSpec("se", length_scale=1.0), np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert k[0, 1] == pytest.approx(np.exp(-1), abs=1e-15)
    assert k[0, 1] == pytest.approx(0.367879, abs=1e-6)


def test_polynomial_parallel():
    k = gram(BaseKernelSpec("polynomial", bias=0.5, degree=1.0), np.array([[1.0, 0.0], [2.0, 0.0]]))
    assert k[0, 1] == pytest.approx(1.5, abs=1e-15)


def test_inner_product():
    x = np.array([[1.0, 2.0], [3.0, -1.0]])
    np.testing.assert_allclose(gram(BaseKernelSpec("inner_product"), x), x @ x.T)


@pytest.mark.parametrize("kind", ["arccosine", "polynomial"])
def test_zero_row_names_node(kind):
    x = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    with pytest.raises(KernelError, match="node 1") as info:
        gram(BaseKernelSpec(kind), x)
    assert info.value.node == 1


def test_non_finite_result_rejected():
    # negative base to a fractional power
    x = np.array([[1.0, 0.0], [-1.0, 0.0]])
    with pytest.raises(KernelError, match="non-finite"):
        gram(BaseKernelSpec("polynomial", bias=0.0, degree=0.5), x)


@pytest.mark.parametrize(
    "kwargs",
    [{"kind": "nope"}, {"kind": "se", "length_scale": 0}, {"kind": "polynomial", "bias": -1}],
)
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        BaseKernelSpec(**kwargs)


def test_spec_json_round_trip():
    for d in [
        {"kind": "arccosine"},
        {"kind": "se", "length_scale": 2.0},
        {"kind": "polynomial", "bias": 0.5, "degree": 1.0},
        {"kind": "inner_product"},
    ]:
        assert BaseKernelSpec.from_dict(d).to_dict() == d


rows = st.integers(1, 12)
cols = st.integers(1, 6)


@settings(max_examples=40, deadline=None)
@given(n=rows, m=cols, seed=st.integers(0, 2**32 - 1))
def test_gram_properties(n, m, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, m)) * rng.uniform(0.1, 10)
    for spec in [
        BaseKernelSpec("se", length_scale=rng.uniform(0.2, 3)),
        BaseKernelSpec("inner_product"),
        BaseKernelSpec("arccosine"),
        BaseKernelSpec("polynomial", bias=0.5, degree=2.0),
    ]:
        k = gram(spec, x)
        assert np.abs(k - k.T).max() <= 1e-12
        if spec.kind in ("se", "arccosine"):
            assert np.abs(np.diag(k) - 1).max() <= 1e-12
        if spec.kind == "se":
            assert (k >= 0).all() and (k <= 1).all()
            d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(-1)
            representable = d2 / (2 * spec.length_scale**2) < 700
            assert (k[representable] > 0).all()
        if spec.kind == "arccosine":
            assert (k >= 0).all() and (k <= 1).all()


@settings(max_examples=40, deadline=None)
@given(n=rows, m=cols, seed=st.integers(0, 2**32 - 1))
def test_clamp_magnitude_is_tiny(n, m, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, m)) * 10 ** rng.uniform(-3, 3)
    c = cosine_similarity(x)
    assert np.maximum(np.abs(c) - 1, 0).max() <= 1e-9


@settings(max_examples=40, deadline=None)
@given(n=rows, m=cols, seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_cosine_kernels_scale_invariant(n, m, seed, scale):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, m))
    y = x.copy()
    y[rng.integers(n)] *= scale
    for spec in [BaseKernelSpec("arccosine"), BaseKernelSpec("polynomial", bias=0.5, degree=3.0)]:
        np.testing.assert_allclose(gram(spec, x), gram(spec, y), rtol=0, atol=1e-10)
