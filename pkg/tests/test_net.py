import numpy as np
import pytest

from driver_attention.data import crop_sample
from driver_attention.models import Architecture, CropPolicy
from driver_attention.net import (
    ModelParams,
    NetConfig,
    Trainer,
    coarse_decode,
    coarse_encode,
    coarse_fine_forward,
    coarse_forward,
    fan_in_bound,
    init_params,
    predict,
    refine,
    sample_loss,
    train_step,
)
from driver_attention.tensor import Adam, ShapeError, Tensor, gradients, no_grad
from driver_attention.tensor.gradcheck import numerical_gradient, relative_error

from .conftest import lively_params


def make_sample(net: NetConfig, seed: int = 0, policy: CropPolicy = CropPolicy.AGGRESSIVE):
    rng = np.random.default_rng(seed)
    clip = rng.uniform(size=(3, 16, 45, 80))
    attention_map = rng.uniform(size=(1, 45, 80))
    return crop_sample(clip, attention_map, rng, policy, net.clip_size, net.refine_size)


def test_tiny_config_shapes(tiny_net):
    assert tiny_net.clip_shape == (3, 16, 64, 64)
    assert tiny_net.bottleneck_shape == (64, 1, 4, 4)
    assert tiny_net.upsample_steps == 1
    shapes = tiny_net.param_shapes()
    assert shapes["coarse.conv1.weight"] == (8, 3, 3, 3, 3)
    assert shapes["coarse.head.weight"] == (1, 4, 3, 3)
    assert shapes["fine.conv1.weight"][1] == 4
    assert shapes["fine.conv4.weight"] == (1, 1, 3, 3)


def test_full_config_shapes():
    net = NetConfig.full()
    assert net.bottleneck_shape == (512, 1, 7, 7)
    assert net.upsample_steps == 2
    coarse_only = NetConfig.full(Architecture.COARSE).param_shapes()
    assert not any(name.startswith("fine.") for name in coarse_only)


@pytest.mark.parametrize("clip_size, refine_size", [(56, 112), (64, 96), (64, 32)])
def test_net_config_rejects_incompatible_sizes(clip_size, refine_size):
    with pytest.raises(ValueError):
        NetConfig(clip_size=clip_size, refine_size=refine_size)


def test_full_decoder_shape():
    params = init_params(0, NetConfig.full())
    bottleneck = np.random.default_rng(0).uniform(size=(512, 1, 7, 7))
    with no_grad():
        out = coarse_decode(bottleneck, params)
    assert out.shape == (1, 112, 112)
    assert out.data.min() >= 0.0


@pytest.mark.slow
def test_full_size_forward_shapes():
    params = init_params(0, NetConfig.full())
    clip = np.random.default_rng(0).uniform(size=(3, 16, 112, 112))
    with no_grad():
        bottleneck = coarse_encode(clip, params)
        assert bottleneck.shape == (512, 1, 7, 7)
        coarse_map = coarse_decode(bottleneck, params)
        assert coarse_map.shape == (1, 112, 112)
        refined = refine(coarse_map, np.zeros((3, 448, 448)), params)
    assert refined.shape == (1, 448, 448)
    assert refined.data.min() >= 0.0


def test_init_is_reproducible_and_bounded(tiny_net):
    a, b, c = init_params(3, tiny_net), init_params(3, tiny_net), init_params(4, tiny_net)
    for name in a:
        np.testing.assert_array_equal(a[name].data, b[name].data)
        if name.endswith(".bias"):
            assert not a[name].data.any()
        else:
            assert np.abs(a[name].data).max() <= fan_in_bound(a[name].shape)
    assert not np.array_equal(a["coarse.conv1.weight"].data, c["coarse.conv1.weight"].data)


def test_wrong_clip_shape_raises(tiny_params):
    with pytest.raises(ShapeError):
        coarse_encode(np.zeros((3, 16, 48, 48)), tiny_params)
    with pytest.raises(ShapeError):
        refine(Tensor(np.zeros((1, 64, 64))), np.zeros((3, 64, 64)), tiny_params)


def test_zero_parameters_give_zero_maps(tiny_net):
    params = ModelParams.from_arrays(tiny_net, {n: np.zeros(s) for n, s in tiny_net.param_shapes().items()})
    sample = make_sample(tiny_net)
    with no_grad():
        cropped_map, refined = coarse_fine_forward(sample.cropped_clip, sample.resized_clip, sample.last_frame, params)
    assert cropped_map.shape == (1, 64, 64) and not cropped_map.data.any()
    assert refined.shape == (1, 128, 128) and not refined.data.any()


def test_coarse_fine_forward_needs_coarse_fine_params():
    params = init_params(0, NetConfig.tiny_config(Architecture.COARSE))
    sample = make_sample(params.net)
    with pytest.raises(ValueError):
        coarse_fine_forward(sample.cropped_clip, sample.resized_clip, sample.last_frame, params)


def _symmetrize(params: ModelParams) -> None:
    for name, tensor in params.items():
        if name.endswith(".weight"):
            tensor.data = 0.5 * (tensor.data + tensor.data[..., ::-1])


def test_mirror_equivariance_with_symmetric_kernels(tiny_net):
    params = lively_params(tiny_net, seed=2)
    _symmetrize(params)
    rng = np.random.default_rng(9)
    clip, frame = rng.uniform(size=(3, 16, 64, 64)), rng.uniform(size=(3, 128, 128))
    with no_grad():
        plain = refine(coarse_forward(clip, params), frame, params).data
        flipped = refine(coarse_forward(clip[..., ::-1], params), frame[..., ::-1], params).data
    assert plain.any()
    np.testing.assert_allclose(flipped, plain[..., ::-1], atol=1e-10)


def test_shared_coarse_weights_sum_both_stream_gradients(tiny_net, tiny_params):
    sample = make_sample(tiny_net, seed=1)
    name = "coarse.conv4b.weight"
    _, loss1, _ = sample_loss(sample, tiny_params)
    from_loss1 = gradients(loss1, tiny_params.tensors)[name]
    _, _, loss2 = sample_loss(sample, tiny_params)
    from_loss2 = gradients(loss2, tiny_params.tensors)[name]
    total, _, _ = sample_loss(sample, tiny_params)
    combined = gradients(total, tiny_params.tensors)[name]
    assert np.abs(from_loss2).sum() > 0
    np.testing.assert_allclose(combined, from_loss1 + from_loss2, rtol=1e-10, atol=1e-14)


def test_end_to_end_gradients_match_finite_differences(tiny_net, tiny_params):
    sample = make_sample(tiny_net, seed=4)
    loss_fn = lambda: sample_loss(sample, tiny_params)[0]  # noqa: E731
    analytic = gradients(loss_fn(), tiny_params.tensors)
    rng = np.random.default_rng(11)
    picked_analytic, picked_numeric = [], []
    for name, tensor in tiny_params.items():
        idx = np.unravel_index(int(rng.integers(tensor.data.size)), tensor.shape)
        numeric = numerical_gradient(loss_fn, tensor, step=1e-6, indices=[idx])
        picked_analytic.append(analytic[name][idx])
        picked_numeric.append(numeric[idx])
    assert relative_error(np.array(picked_analytic), np.array(picked_numeric)) < 1e-3


def test_train_step_rejects_empty_batch(tiny_params):
    with pytest.raises(ValueError):
        train_step([], tiny_params, Adam())


def test_zero_loss_step_keeps_parameters():
    net = NetConfig.tiny_config(Architecture.COARSE)
    params = ModelParams.from_arrays(net, {n: np.zeros(s) for n, s in net.param_shapes().items()})
    sample = make_sample(net, policy=CropPolicy.MILD)
    sample = sample.model_copy(update={"cropped_map": np.zeros_like(sample.cropped_map)})
    losses = train_step([sample], params, Adam())
    assert losses.loss1 == 0.0 and losses.loss2 is None
    assert all(not t.data.any() for _, t in params.items())


def test_repeated_step_on_same_batch_lowers_loss():
    net = NetConfig.tiny_config(Architecture.COARSE)
    decreases = 0
    for trial in range(20):
        params = lively_params(net, seed=trial)
        batch = [make_sample(net, seed=100 + trial, policy=CropPolicy.MILD)]
        optimizer = Adam(learning_rate=1e-4)
        before = train_step(batch, params, optimizer).total
        after = train_step(batch, params, optimizer).total
        decreases += after <= before
    assert decreases >= 18


def test_trainer_logs_interval_means():
    net = NetConfig.tiny_config(Architecture.COARSE)
    params = lively_params(net)
    sample = make_sample(net, policy=CropPolicy.MILD)
    calls = []

    def validate(p):
        calls.append(p)
        return 0.5

    trainer = Trainer(params=params, sampler=lambda n: [sample] * n, batch_size=1, validate=validate)
    rows = trainer.fit(steps=5, log_every=2)
    assert [r["step"] for r in rows] == [2, 4]
    assert all(r["loss2"] is None and r["val_cc"] == 0.5 for r in rows)
    assert len(calls) == 2
    assert trainer.optimizer.step_count == 5


def test_predict_is_deterministic_and_needs_sixteen_frames(tiny_params):
    frames = np.random.default_rng(5).uniform(size=(3, 20, 45, 80))
    first, second = predict(frames, tiny_params), predict(frames, tiny_params)
    assert first.shape == (1, 128, 128)
    np.testing.assert_array_equal(first, second)
    with pytest.raises(ValueError):
        predict(frames[:, :15], tiny_params)


def test_coarse_predict_returns_clip_resolution():
    params = lively_params(NetConfig.tiny_config(Architecture.COARSE))
    out = predict(np.random.default_rng(6).uniform(size=(3, 16, 45, 80)), params)
    assert out.shape == (1, 64, 64)
    assert out.min() >= 0.0
