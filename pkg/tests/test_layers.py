import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from absalab import autograd as ag
from absalab.autograd import Tensor
from absalab.layers import (
    AttentionParams,
    GruCellParams,
    HeadParams,
    LstmCellParams,
    additive_attention,
    append_to_rows,
    classify,
    embed,
    max_pool_rows,
    run_bigru,
    run_lstm,
)
from absalab.optim import ParamStore, grad_check


def make_gru(store, name, d, h, seed=0, dtype=np.float64):
    return GruCellParams.create(store, name, d, h, np.random.default_rng(seed), dtype)


def make_lstm(store, name, d, h, seed=0, dtype=np.float64):
    return LstmCellParams.create(store, name, d, h, np.random.default_rng(seed), dtype)


def zero_params(store):
    for name in store.names():
        store.value(name)[...] = 0.0


# -- embed -----------------------------------------------------------------------


def test_embed_picks_matrix_rows():
    matrix = np.eye(3, dtype=np.float32)
    out = embed([0], matrix)
    npt.assert_array_equal(out.data, [[1, 0, 0]])


def test_embed_empty_sequence_is_zero_by_d():
    out = embed([], np.zeros((4, 7), dtype=np.float32))
    assert out.data.shape == (0, 7)


def test_embed_repeated_ids_give_identical_rows(rng):
    matrix = rng.normal(size=(5, 3))
    out = embed([2, 2], matrix)
    npt.assert_array_equal(out.data[0], out.data[1])


def test_embed_out_of_range_errors():
    with pytest.raises(IndexError):
        embed([3], np.zeros((3, 2)))


def test_embed_gradients_scatter_into_parameter_rows():
    store = ParamStore()
    table = store.param("emb", np.ones((4, 2)))
    out = embed([1, 1, 3], table)
    out.sum().backward()
    expected = np.zeros((4, 2))
    expected[1] = 2.0
    expected[3] = 1.0
    npt.assert_array_equal(table.grad, expected)


# -- GRU --------------------------------------------------------------------------


def test_bigru_zero_everything_is_fixed_point():
    # zero weights: update gate 0.5, candidate 0 -> h stays 0
    store = ParamStore()
    fwd = make_gru(store, "f", 3, 4)
    bwd = make_gru(store, "b", 3, 4)
    zero_params(store)
    out = run_bigru(Tensor(np.zeros((5, 3))), fwd, bwd)
    npt.assert_array_equal(out.data, np.zeros((5, 8)))


def test_bigru_output_width_is_twice_hidden():
    store = ParamStore()
    fwd = make_gru(store, "f", 6, 32)
    bwd = make_gru(store, "b", 6, 32)
    out = run_bigru(Tensor(np.random.default_rng(0).normal(size=(4, 6))), fwd, bwd)
    assert out.data.shape == (4, 64)


def test_bigru_single_step_concatenates_directions(rng):
    store = ParamStore()
    fwd = make_gru(store, "f", 3, 2, seed=1)
    bwd = make_gru(store, "b", 3, 2, seed=2)
    x = Tensor(rng.normal(size=(1, 3)))
    out = run_bigru(x, fwd, bwd)
    fwd_only = run_bigru(x, fwd, fwd)
    bwd_only = run_bigru(x, bwd, bwd)
    npt.assert_allclose(out.data[0][:2], fwd_only.data[0][:2])
    npt.assert_allclose(out.data[0][2:], bwd_only.data[0][2:])


def test_bigru_reversal_symmetry(rng):
    store = ParamStore()
    fwd = make_gru(store, "f", 3, 4, seed=1)
    bwd = make_gru(store, "b", 3, 4, seed=2)
    x = rng.normal(size=(6, 3))
    out = run_bigru(Tensor(x), fwd, bwd).data
    flipped = run_bigru(Tensor(x[::-1].copy()), bwd, fwd).data
    # reversing inputs and swapping cells reverses rows and swaps halves
    recombined = np.concatenate([flipped[::-1, 4:], flipped[::-1, :4]], axis=1)
    npt.assert_allclose(out, recombined, atol=1e-12)


def test_bigru_rejects_empty_input():
    store = ParamStore()
    fwd = make_gru(store, "f", 3, 4)
    bwd = make_gru(store, "b", 3, 4)
    with pytest.raises(ValueError):
        run_bigru(Tensor(np.zeros((0, 3))), fwd, bwd)


# -- LSTM -------------------------------------------------------------------------


def test_lstm_empty_input_yields_zero_final_state():
    store = ParamStore()
    cell = make_lstm(store, "l", 3, 4)
    states, final = run_lstm(Tensor(np.zeros((0, 3))), cell)
    assert states.data.shape == (0, 4)
    npt.assert_array_equal(final.data, np.zeros(4))


def test_lstm_zero_weights_zero_input_single_step():
    store = ParamStore()
    cell = make_lstm(store, "l", 3, 4)
    zero_params(store)
    _, final = run_lstm(Tensor(np.zeros((1, 3))), cell)
    npt.assert_array_equal(final.data, np.zeros(4))


def test_lstm_backward_equals_forward_on_reversed(rng):
    store = ParamStore()
    cell = make_lstm(store, "l", 3, 5, seed=4)
    x = rng.normal(size=(3, 3))
    back_states, back_final = run_lstm(Tensor(x), cell, "backward")
    fwd_states, fwd_final = run_lstm(Tensor(x[::-1].copy()), cell, "forward")
    npt.assert_allclose(back_states.data, fwd_states.data[::-1], atol=1e-12)
    npt.assert_allclose(back_final.data, fwd_final.data, atol=1e-12)


def test_lstm_forget_bias_initialized_to_one():
    store = ParamStore()
    cell = make_lstm(store, "l", 3, 4)
    npt.assert_array_equal(cell.b_forget.data, np.ones(4))
    npt.assert_array_equal(cell.b_in.data, np.zeros(4))


def test_lstm_unknown_direction():
    store = ParamStore()
    cell = make_lstm(store, "l", 3, 4)
    with pytest.raises(ValueError):
        run_lstm(Tensor(np.zeros((2, 3))), cell, "sideways")


# -- attention ---------------------------------------------------------------------


def attention_fixture(key_dim=4, query_dim=3, seed=0):
    store = ParamStore()
    params = AttentionParams.create(store, "attn", key_dim, query_dim, np.random.default_rng(seed), dtype=np.float64)
    return store, params


def test_attention_identical_keys_split_evenly(rng):
    _, params = attention_fixture()
    key = rng.normal(size=4)
    keys = Tensor(np.stack([key, key]))
    alpha, pooled = additive_attention(keys, Tensor(rng.normal(size=3)), params)
    npt.assert_allclose(alpha.data, [0.5, 0.5], atol=1e-12)
    npt.assert_allclose(pooled.data, key, atol=1e-12)


def test_attention_single_key_gets_weight_one(rng):
    _, params = attention_fixture()
    key = rng.normal(size=4)
    alpha, pooled = additive_attention(Tensor(key[None, :]), Tensor(rng.normal(size=3)), params)
    npt.assert_allclose(alpha.data, [1.0])
    npt.assert_allclose(pooled.data, key)


def test_attention_zero_scoring_vector_is_uniform(rng):
    _, params = attention_fixture()
    params.score.data[...] = 0.0
    keys = Tensor(rng.normal(size=(5, 4)))
    alpha, _ = additive_attention(keys, Tensor(rng.normal(size=3)), params)
    npt.assert_allclose(alpha.data, np.full(5, 0.2), atol=1e-12)


def test_attention_rejects_empty_keys(rng):
    _, params = attention_fixture()
    with pytest.raises(ValueError):
        additive_attention(Tensor(np.zeros((0, 4))), Tensor(rng.normal(size=3)), params)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=2**31 - 1))
def test_attention_alpha_is_probability_and_permutation_equivariant(n, seed):
    rng = np.random.default_rng(seed)
    _, params = attention_fixture(seed=seed % 1000)
    keys = rng.normal(size=(n, 4))
    query = Tensor(rng.normal(size=3))
    alpha, _ = additive_attention(Tensor(keys), query, params)
    assert (alpha.data >= 0).all()
    assert abs(alpha.data.sum() - 1.0) < 1e-6
    perm = rng.permutation(n)
    alpha_perm, _ = additive_attention(Tensor(keys[perm]), query, params)
    npt.assert_allclose(alpha_perm.data, alpha.data[perm], atol=1e-9)


# -- head / pooling -----------------------------------------------------------------


def head_fixture(d=4, seed=0):
    store = ParamStore()
    return store, HeadParams.create(store, "head", d, 3, np.random.default_rng(seed), dtype=np.float64)


def test_classify_zero_parameters_gives_uniform_logits(rng):
    store, head = head_fixture()
    zero_params(store)
    logits = classify(Tensor(rng.normal(size=4)), head)
    npt.assert_array_equal(logits.data, np.zeros(3))
    npt.assert_allclose(ag.softmax(logits).data, np.full(3, 1 / 3), atol=1e-12)


def test_classify_bias_selects_argmax(rng):
    store, head = head_fixture()
    zero_params(store)
    head.bias.data[...] = [1.0, 0.0, 0.0]
    logits = classify(Tensor(rng.normal(size=4)), head)
    assert int(np.argmax(logits.data)) == 0


def test_classify_probabilities_normalize(rng):
    _, head = head_fixture()
    logits = classify(Tensor(rng.normal(size=4)), head)
    assert abs(ag.softmax(logits).data.sum() - 1.0) < 1e-9


def test_classify_dimension_mismatch():
    _, head = head_fixture(d=4)
    with pytest.raises(ag.ShapeError, match="classify"):
        classify(Tensor(np.zeros(5)), head)


def test_max_pool_rows_examples():
    npt.assert_array_equal(max_pool_rows(Tensor(np.array([[1.0, 0.0], [0.0, 1.0]]))).data, [1.0, 1.0])
    single = np.array([[0.3, -0.7, 2.0]])
    npt.assert_array_equal(max_pool_rows(Tensor(single)).data, single[0])
    with pytest.raises(ValueError):
        max_pool_rows(Tensor(np.zeros((0, 3))))


def test_max_pool_rows_permutation_invariant(rng):
    m = rng.normal(size=(6, 4))
    perm = rng.permutation(6)
    npt.assert_array_equal(max_pool_rows(Tensor(m)).data, max_pool_rows(Tensor(m[perm])).data)


def test_append_to_rows(rng):
    m = rng.normal(size=(3, 2))
    v = rng.normal(size=4)
    out = append_to_rows(Tensor(m), Tensor(v))
    assert out.data.shape == (3, 6)
    npt.assert_array_equal(out.data[:, :2], m)
    for row in out.data:
        npt.assert_array_equal(row[2:], v)


# -- gradients through compositions ---------------------------------------------------


def test_composed_layer_gradients_pass_grad_check(rng):
    store = ParamStore()
    gen = np.random.default_rng(11)
    fwd = GruCellParams.create(store, "f", 3, 4, gen, np.float64)
    bwd = GruCellParams.create(store, "b", 3, 4, gen, np.float64)
    attn = AttentionParams.create(store, "a", 8, 8, gen, dtype=np.float64)
    head = HeadParams.create(store, "h", 8, 3, gen, np.float64)
    x = rng.normal(size=(5, 3))

    def loss():
        states = run_bigru(Tensor(x), fwd, bwd)
        pooled_query = max_pool_rows(states)
        _, pooled = additive_attention(states, pooled_query, attn)
        return ag.cross_entropy(classify(pooled, head), 1)

    assert grad_check(store, loss, max_coords_per_param=3) < 1e-4
