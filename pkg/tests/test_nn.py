import math

import numpy as np
import pytest

from afa.augment import AfaConfig, VisualAugConfig, standard_visual_aug_batch
from afa.config import RunConfig
from afa.data import Dataset
from afa.errors import InsufficientBatch, InvalidLabel, NoTape, NotADistribution, ShapeMismatch
from afa.nn import (
    SGD,
    Branch,
    LossConfig,
    LossMode,
    Model,
    ModelSpec,
    ace_loss,
    bn_divergence_report,
    ce_loss,
    jsd_from_logits,
    jsd_loss,
    load_checkpoint,
    save_checkpoint,
    train,
    train_epoch,
    weight_norm_report,
)
from afa.pipeline import train_from_config
from afa.tensor_core import Rng
from afa.verify import grad_suite

SMALL = ModelSpec((3, 8, 8), ((4, 3, 1), (6, 3, 2)), 4)


def _batch(seed, n=6, shape=(3, 8, 8)):
    return Rng(seed).uniform((n,) + shape).astype(np.float32)


def _tiny_dataset(seed=0, n=24, k=4):
    rng = Rng(seed)
    return Dataset(rng.uniform((n, 3, 8, 8)), np.arange(n) % k)


# -- model --------------------------------------------------------------------


def test_forward_deterministic_and_shape():
    model = Model(SMALL, seed=1)
    x = _batch(0)
    a = model.forward(x, Branch.MAIN, training=False)
    b = model.forward(x, Branch.MAIN, training=False)
    assert a.shape == (6, 4)
    assert a.tobytes() == b.tobytes()


def test_eval_output_independent_of_batch():
    model = Model(SMALL, seed=2)
    x = _batch(1, n=8)
    full = model.logits(x)
    for i in range(8):
        np.testing.assert_allclose(model.logits(x[i:i + 1])[0], full[i], rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(model.logits(x, batch_size=3), full, rtol=1e-5, atol=1e-6)


def test_training_requires_two_images():
    with pytest.raises(InsufficientBatch):
        Model(SMALL).forward(_batch(0, n=1), training=True)


def test_input_shape_checked():
    with pytest.raises(ShapeMismatch):
        Model(SMALL).forward(_batch(0, shape=(3, 9, 9)))


def test_same_seed_same_init():
    a, b = Model(SMALL, seed=5), Model(SMALL, seed=5)
    for k in a.params:
        assert a.params[k].tobytes() == b.params[k].tobytes()


@pytest.mark.parametrize("branch", list(Branch))
def test_branch_isolation(branch):
    model = Model(SMALL, seed=3)
    other = Branch.AUX if branch is Branch.MAIN else Branch.MAIN
    before = model.branch_state_hash(other)
    own_before = model.branch_state_hash(branch)
    optim = SGD.for_model(model, lr=0.1)
    for step in range(4):
        z = model.forward(_batch(step), branch, training=True)
        _, g = ce_loss(z, np.arange(6) % 4)
        optim.step(model.params, model.backward(g))
    assert model.branch_state_hash(other) == before
    assert model.branch_state_hash(branch) != own_before


def test_aux_pass_gives_zero_main_affine_grad():
    model = Model(SMALL, seed=4)
    z = model.forward(_batch(2), Branch.AUX, training=True)
    grads = model.backward(ce_loss(z, np.arange(6) % 4)[1])
    main_affine = [k for k in model.norm_affine_names() if ".main." in k]
    assert main_affine
    for k in main_affine:
        assert not np.any(grads[k])
    assert any(np.any(grads[k]) for k in model.norm_affine_names() if ".aux." in k)


def test_backward_needs_tape():
    model = Model(SMALL)
    with pytest.raises(NoTape):
        model.backward(np.zeros((2, 4)))
    model.logits(_batch(0))
    with pytest.raises(NoTape):
        model.backward(np.zeros((6, 4)))


def test_gradient_linearity():
    model = Model(SMALL, seed=6, dtype=np.float64)
    x = _batch(3).astype(np.float64)
    z = model.forward(x, training=True)
    g1 = model.backward(np.ones_like(z))
    model.forward(x, training=True)
    g2 = model.backward(2 * np.ones_like(z))
    for k in g1:
        np.testing.assert_allclose(g2[k], 2 * g1[k], rtol=1e-10, atol=1e-12)


def test_grad_suite_passes():
    records = grad_suite(seeds=(0, 1))
    failed = [r for r in records if not r["passed"]]
    assert not failed, failed


def test_running_stats_use_unbiased_variance():
    model = Model(ModelSpec((1, 4, 4), ((2, 1, 1),), 2), seed=0, dtype=np.float64)
    layer = model.norm_layers[0]
    x = Rng(0).normal((3, 1, 4, 4))
    model.forward(x, Branch.MAIN, training=True)
    conv = model.params[model.conv_layers[0].weight]
    h = np.einsum("oi,nihw->nohw", conv[:, :, 0, 0], x)
    var = h.var(axis=(0, 2, 3), ddof=1)
    np.testing.assert_allclose(model.buffers[layer.key(Branch.MAIN, "var")], 0.9 + 0.1 * var)
    np.testing.assert_allclose(model.buffers[layer.key(Branch.MAIN, "mean")], 0.1 * h.mean(axis=(0, 2, 3)))


# -- losses ---------------------------------------------------------------------


def test_ce_uniform_logits():
    loss, _ = ce_loss(np.zeros((3, 10)), [0, 4, 9])
    assert loss == pytest.approx(math.log(10), abs=1e-6)


def test_ce_margin_limit():
    losses = [ce_loss(np.array([[m, 0.0, 0.0]]), [0])[0] for m in (1, 10, 40)]
    assert losses[0] > losses[1] > losses[2] and losses[2] < 1e-15


def test_ce_label_errors():
    with pytest.raises(InvalidLabel):
        ce_loss(np.zeros((2, 3)), [0, 3])
    with pytest.raises(ShapeMismatch):
        ce_loss(np.zeros((2, 3)), [0])


def test_ace_definition():
    z = Rng(0).normal((4, 5))
    y = [0, 1, 2, 3]
    assert ace_loss(z, z, y)[0] == pytest.approx(ce_loss(z, y)[0])
    # logits with CE 1.0 and 3.0 on one row: log-softmax pinned through the true class
    zm = np.array([[0.0, math.log(math.e - 1)]])
    za = np.array([[0.0, math.log(math.e**3 - 1)]])
    assert ce_loss(zm, [0])[0] == pytest.approx(1.0)
    assert ce_loss(za, [0])[0] == pytest.approx(3.0)
    assert ace_loss(zm, za, [0])[0] == pytest.approx(2.0)
    with pytest.raises(ShapeMismatch):
        ace_loss(np.zeros((2, 3)), np.zeros((3, 3)), [0, 1])


def test_jsd_identical_and_disjoint():
    p = np.array([[0.2, 0.3, 0.5], [0.1, 0.1, 0.8]])
    assert jsd_loss(p, p, p) == pytest.approx(0.0, abs=1e-12)
    e = np.eye(4)
    assert jsd_loss(e[[0, 1]], e[[1, 2]], e[[2, 3]]) == pytest.approx(math.log(3))
    with pytest.raises(NotADistribution):
        jsd_loss(p * 2, p, p)


def test_jsd_from_logits_matches_probability_form():
    from scipy.special import softmax

    zs = [Rng(i).normal((3, 5)) for i in range(3)]
    loss, _ = jsd_from_logits(*zs)
    assert loss == pytest.approx(jsd_loss(*[softmax(z, axis=1) for z in zs]))


# -- optimizer ------------------------------------------------------------------


def test_sgd_plain():
    opt = SGD(lr=0.1, momentum=0.0, weight_decay=0.0)
    params = {"w": np.array([1.0, -2.0])}
    opt.step(params, {"w": np.array([0.5, 1.0])})
    np.testing.assert_allclose(params["w"], [0.95, -2.1])


def test_sgd_nesterov_two_steps_hand_oracle():
    # buf1 = 1.0, d1 = 1 + 0.9 * 1 = 1.9, p1 = 1 - 0.19 = 0.81
    # buf2 = 0.9 * 1 + 0.5 = 1.4, d2 = 0.5 + 0.9 * 1.4 = 1.76, p2 = 0.81 - 0.176 = 0.634
    opt = SGD(lr=0.1, momentum=0.9, nesterov=True, weight_decay=0.0)
    params = {"p": np.array(1.0)}
    opt.step(params, {"p": np.array(1.0)})
    assert float(params["p"]) == pytest.approx(0.81)
    opt.step(params, {"p": np.array(0.5)})
    assert float(params["p"]) == pytest.approx(0.634)


def test_sgd_decay_exemption():
    model = Model(SMALL)
    opt = SGD.for_model(model, lr=0.1, weight_decay=0.5)
    before = {k: v.copy() for k, v in model.params.items()}
    opt.step(model.params, {k: np.zeros_like(v) for k, v in model.params.items()})
    for k in model.params:
        if k in model.norm_affine_names():
            np.testing.assert_array_equal(model.params[k], before[k])
        elif k.endswith("weight"):
            assert not np.array_equal(model.params[k], before[k])


# -- training -------------------------------------------------------------------


def _configs():
    return AfaConfig(image_size=8), VisualAugConfig(1, 0.5), LossConfig()


def test_train_epoch_is_reproducible():
    afa, vis, loss = _configs()
    finals = []
    for _ in range(2):
        model = Model(SMALL, seed=0)
        opt = SGD.for_model(model, lr=0.05)
        train(model, _tiny_dataset(), afa, vis, loss, opt, Rng(9), 2, batch_size=8)
        finals.append(model)
    for k in finals[0].params:
        assert finals[0].params[k].tobytes() == finals[1].params[k].tobytes()


@pytest.mark.parametrize("setting", ["standard", "afa_main", "afa_aux"])
def test_train_settings_run(setting):
    afa, vis, loss = _configs()
    model = Model(SMALL, seed=0)
    stats = train_epoch(model, _tiny_dataset(), afa, vis, loss, SGD.for_model(model, lr=0.05), Rng(0),
                        setting=setting, batch_size=8)
    assert stats.batches == 3 and np.isfinite(stats.loss)


def test_ce_jsd_mode_runs():
    afa, vis, _ = _configs()
    model = Model(SMALL, seed=0)
    stats = train_epoch(model, _tiny_dataset(), afa, vis, LossConfig(LossMode.CE_JSD, 12.0),
                        SGD.for_model(model, lr=0.05), Rng(0), batch_size=8)
    assert np.isfinite(stats.loss)


def test_zero_strength_ace_equals_clean_aux_ce():
    """With sigma = 0 the auxiliary view is the raw image."""
    _, vis, loss = _configs()
    afa = AfaConfig(image_size=8, fixed_strength=0.0)
    data = _tiny_dataset(1)
    model = Model(SMALL, seed=2)
    ref = model.copy()
    rng = Rng(4)
    stats = train_epoch(model, data, afa, vis, loss, SGD.for_model(model, lr=0.05), rng, batch_size=8)

    opt = SGD.for_model(ref, lr=0.05)
    order = rng.child("shuffle").permutation(len(data))
    losses = []
    for start in range(0, len(order), 8):
        idx = order[start:start + 8]
        x, y = data.images[idx], data.labels[idx]
        x_vis = standard_visual_aug_batch(x, vis, [rng.child("visual", int(i)) for i in idx])
        zm = ref.forward(x_vis, Branch.MAIN, training=True)
        gm = ref.backward(ce_loss(zm, y)[1])
        za = ref.forward(x, Branch.AUX, training=True)
        ga = ref.backward(ce_loss(za, y)[1])
        losses.append(0.5 * (ce_loss(zm, y)[0] + ce_loss(za, y)[0]))
        opt.step(ref.params, {k: 0.5 * (gm[k] + ga[k]) for k in gm})
    assert stats.loss == pytest.approx(np.mean(losses), rel=1e-6)
    for k in ref.params:
        np.testing.assert_allclose(model.params[k], ref.params[k], rtol=1e-5, atol=1e-6)


@pytest.fixture(scope="module")
def smoke_run():
    """20 epochs with the default toy configuration."""
    model, history, test_set = train_from_config(RunConfig(seed=0, epochs=20))
    return model, history, test_set


@pytest.mark.slow
def test_smoke_loss_decreases(smoke_run):
    _, history, _ = smoke_run
    losses = [s.loss for s in history]
    rises = sum(b > a for a, b in zip(losses, losses[1:]))
    assert losses[-1] < losses[0] and rises <= 3, losses


@pytest.mark.slow
def test_smoke_clean_accuracy(smoke_run):
    model, _, test_set = smoke_run
    acc = float(np.mean(model.predict(test_set.images) == test_set.labels))
    assert acc >= 0.9, acc


@pytest.mark.slow
def test_trained_branches_diverge(smoke_run):
    model, _, _ = smoke_run
    assert any(g > 0 or b > 0 for _, g, b in bn_divergence_report(model))


# -- diagnostics and checkpoints --------------------------------------------------


def test_fresh_model_has_zero_divergence_and_symmetry():
    model = Model(SMALL, seed=0)
    assert all(g == 0 and b == 0 for _, g, b in bn_divergence_report(model))
    for layer in model.norm_layers:
        model.params[layer.key(Branch.AUX, "gamma")] += Rng(1).normal(layer.channels).astype(np.float32)
    swapped = model.copy()
    for layer in model.norm_layers:
        for field in ("gamma", "beta"):
            a, b = layer.key(Branch.MAIN, field), layer.key(Branch.AUX, field)
            swapped.params[a], swapped.params[b] = model.params[b], model.params[a]
    assert bn_divergence_report(model) == bn_divergence_report(swapped)


def test_weight_norms():
    zero = Model(ModelSpec(SMALL.input_shape, SMALL.blocks, 4, "zeros"))
    assert all(v == 0 for _, v in weight_norm_report(zero))
    model = Model(SMALL, seed=0)
    before = weight_norm_report(model)
    model.logits(_batch(0))
    model.forward(_batch(1), Branch.AUX, training=True)
    assert weight_norm_report(model) == before
    assert [d for d, _ in before] == [1, 2]


def test_checkpoint_round_trip(tmp_path):
    model = Model(SMALL, seed=7)
    model.forward(_batch(0), Branch.AUX, training=True)
    save_checkpoint(model, tmp_path / "ck")
    back = load_checkpoint(tmp_path / "ck")
    assert back.spec == model.spec
    for k in model.params:
        assert back.params[k].tobytes() == model.params[k].tobytes()
    for k in model.buffers:
        assert back.buffers[k].tobytes() == model.buffers[k].tobytes()
    manifest = (tmp_path / "ck" / "model.manifest").read_text()
    roles = {line.split()[-1] for line in manifest.splitlines() if "->" in line}
    assert roles == {"weight", "main-affine", "aux-affine", "stat"}
