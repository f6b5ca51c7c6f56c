from __future__ import annotations


from typing import Mapping

import numpy as np
import pytest
from hypothesis import (
    given,
    settings,
    strategies as st
)

from fcac.diffmath.autodiff import (
    Autodiff,
    Graph
)
from fcac.diffmath.optimizer import (
    Optimizer,
    OptimizerConfig
)
from fcac.diffmath.tensor import Tensor
from fcac.exceptions import (
    ConfigError,
    NonFiniteValue,
    NonScalarRoot,
    ShapeMismatch
)


def test_backward_of_square() -> None:
    x = Tensor(3.0, requires_grad=True)
    grads = Autodiff.backward(x * x)
    assert float(grads[x]) == pytest.approx(6.0)


def test_backward_accumulates_shared_subexpressions() -> None:
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    y = x * 2.0
    grads = Autodiff.backward((y + y * y).sum())
    np.testing.assert_allclose(grads[x], 2.0 + 8.0 * x.data)


def test_backward_requires_scalar_root() -> None:
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(NonScalarRoot):
        Autodiff.backward(x * 2.0)


def test_constants_receive_no_gradient() -> None:
    x = Tensor(np.ones(2), requires_grad=True)
    c = Tensor(np.full(2, 5.0))
    grads = Autodiff.backward((x * c).sum())
    assert set(grads) == {x}
    np.testing.assert_allclose(grads[x], [5.0, 5.0])


def test_matmul_shape_mismatch_names_the_operation() -> None:
    with pytest.raises(ShapeMismatch) as info:
        Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))
    assert info.value.op_id.startswith("matmul#")


def test_log_of_zero_is_non_finite() -> None:
    with pytest.raises(NonFiniteValue) as info:
        Tensor(np.zeros(2)).log()
    assert info.value.op_id.startswith("log#")


def test_log_sum_exp_is_stable() -> None:
    x = Tensor(np.array([[1000.0, 1000.0], [-1000.0, 0.0]]))
    out = x.log_sum_exp(axis=1)
    np.testing.assert_allclose(out.data, [1000.0 + np.log(2.0), np.log1p(np.exp(-1000.0))], atol=1e-12)


def test_max_routes_gradient_to_the_selected_entry() -> None:
    x = Tensor(np.array([[1.0, 3.0, 3.0], [2.0, 0.0, 1.0]]), requires_grad=True)
    top, indices = x.max(axis=1)
    np.testing.assert_array_equal(indices, [1, 0])
    grads = Autodiff.backward(top.sum())
    np.testing.assert_array_equal(grads[x], [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])


def test_normalize_produces_unit_rows(
    rng: np.random.Generator
) -> None:
    x = Tensor(rng.standard_normal((4, 5)))
    np.testing.assert_allclose(np.linalg.norm(x.normalize(axis=1).data, axis=1), 1.0)


def test_conv2d_matches_direct_cross_correlation(
    rng: np.random.Generator
) -> None:
    x = rng.standard_normal((1, 2, 4, 5))
    k = rng.standard_normal((3, 2, 3, 3))
    out = Tensor(x).conv2d(Tensor(k), stride=1, padding=1).data
    padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    expected = np.zeros((1, 3, 4, 5))
    for o in range(3):
        for i in range(4):
            for j in range(5):
                expected[0, o, i, j] = np.sum(padded[0, :, i:i + 3, j:j + 3] * k[o])
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_conv2d_stride_two_output_shape(
    rng: np.random.Generator
) -> None:
    out = Tensor(rng.standard_normal((2, 1, 8, 8))).conv2d(Tensor(rng.standard_normal((4, 1, 3, 3))), stride=2, padding=1)
    assert out.shape == (2, 4, 4, 4)


def _composite(
    leaves: Mapping[str, Tensor]
) -> Tensor:
    x = leaves["x"]
    w = leaves["w"]
    scores = (x @ w).relu() + (x @ w) * 0.1
    return scores.log_sum_exp(axis=1).mean() + (x.normalize(axis=1) * 0.5).sum()


def _conv(
    leaves: Mapping[str, Tensor]
) -> Tensor:
    out = leaves["x"].conv2d(leaves["k"], stride=2, padding=1)
    return (out * out).mean().sqrt()


@pytest.mark.parametrize(("function", "shapes"), [
    (_composite, {"x": (3, 4), "w": (4, 5)}),
    (_conv, {"x": (1, 2, 5, 5), "k": (2, 2, 3, 3)})
])
def test_gradient_check_on_composites(
    function: object,
    shapes: dict[str, tuple[int, ...]],
    rng: np.random.Generator
) -> None:
    params = {name: rng.standard_normal(shape) for name, shape in shapes.items()}
    assert Autodiff.gradient_check(function, params, eps=1e-6) < 1e-6


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_gradient_check_of_cosine_softmax(
    seed: int
) -> None:
    rng = np.random.Generator(np.random.PCG64(seed))

    def function(
        leaves: Mapping[str, Tensor]
    ) -> Tensor:
        scores = leaves["e"].normalize(axis=1) @ leaves["w"].normalize(axis=0) * 4.0
        return (scores.log_sum_exp(axis=1) - scores[np.arange(3), np.array([0, 1, 1])]).mean()

    params = {
        "e": rng.standard_normal((3, 4)) + 0.1,
        "w": rng.standard_normal((4, 2)) + 0.1
    }
    assert Autodiff.gradient_check(function, params, eps=1e-6) < 1e-5


def test_relative_error_scales_with_small_gradients() -> None:
    assert Autodiff.relative_error(np.array([1e-5]), np.array([2e-5])) == pytest.approx(0.5)
    assert Autodiff.relative_error(np.array([0.0, 100.0]), np.array([0.0, 101.0])) == pytest.approx(1.0 / 101.0)
    assert Autodiff.relative_error(np.zeros(3), np.full(3, 1e-9)) == 0.0
    assert Autodiff.relative_error(np.zeros((0, 2)), np.zeros((0, 2))) == 0.0


def test_gradient_check_catches_a_small_wrong_gradient() -> None:

    def function(
        leaves: Mapping[str, Tensor]
    ) -> Tensor:
        # The untracked copy of x hides half the slope from backward: 2e-5 reported, 1e-5 actual.
        x = leaves["x"]
        return (x * 2e-5 - Tensor(x.data) * 1e-5).sum()

    assert Autodiff.gradient_check(function, {"x": np.array([0.3])}) == pytest.approx(0.5)


def test_graph_rejects_wrong_input_shapes() -> None:
    graph = Graph(function=lambda leaves: leaves["x"].sum(), input_shapes={"x": (2,)})
    assert graph.forward({"x": np.array([1.0, 2.0])}).value == pytest.approx(3.0)
    with pytest.raises(ShapeMismatch):
        graph.forward({"x": np.ones(3)})
    with pytest.raises(ShapeMismatch):
        graph.forward({"y": np.ones(2)})


def test_graph_gives_zero_gradient_to_unused_inputs() -> None:
    graph = Graph(
        function=lambda leaves: (leaves["a"] * leaves["a"]).sum(),
        input_shapes={"a": (2,), "b": (3,)}
    )
    grads = graph.forward({"a": np.array([1.0, -2.0]), "b": np.ones(3)}).backward()
    np.testing.assert_allclose(grads["a"], [2.0, -4.0])
    np.testing.assert_array_equal(grads["b"], np.zeros(3))


def test_sgd_momentum_two_steps() -> None:
    params = {"p": np.array([0.0])}
    state = Optimizer.initial_state(params, OptimizerConfig(learning_rate=0.1, momentum=0.9))
    params, state = Optimizer.sgd_step(params, {"p": np.array([1.0])}, state)
    np.testing.assert_allclose(params["p"], [-0.1])
    params, state = Optimizer.sgd_step(params, {"p": np.array([1.0])}, state)
    np.testing.assert_allclose(params["p"], [-0.29])
    np.testing.assert_allclose(state.velocity["p"], [1.9])


def test_sgd_keeps_parameters_without_gradients() -> None:
    params = {"a": np.ones(2), "b": np.ones(3)}
    state = Optimizer.initial_state(params, OptimizerConfig())
    new_params, _ = Optimizer.sgd_step(params, {"a": np.ones(2)}, state)
    np.testing.assert_array_equal(new_params["b"], params["b"])


def test_sgd_rejects_mismatched_gradient() -> None:
    params = {"a": np.ones(2)}
    state = Optimizer.initial_state(params, OptimizerConfig())
    with pytest.raises(ShapeMismatch):
        Optimizer.sgd_step(params, {"a": np.ones(3)}, state)


def test_clip_grad_norm_rescales_jointly() -> None:
    clipped = Optimizer.clip_grad_norm({"a": np.array([3.0]), "b": np.array([4.0])}, 1.0)
    np.testing.assert_allclose(clipped["a"], [0.6])
    np.testing.assert_allclose(clipped["b"], [0.8])
    unclipped = Optimizer.clip_grad_norm({"a": np.array([0.3])}, 1.0)
    np.testing.assert_allclose(unclipped["a"], [0.3])


def test_optimizer_config_validation() -> None:
    with pytest.raises(ConfigError):
        OptimizerConfig(momentum=1.0)
    with pytest.raises(ConfigError):
        OptimizerConfig(learning_rate=0.0)
