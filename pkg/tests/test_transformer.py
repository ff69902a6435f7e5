"""Tests for the from-scratch in-context transformer.

Everything here runs on deliberately tiny models so the whole file stays
fast; the full-scale training behaviour is exercised by the acceptance
suite. The gradient tests compare the hand-written backward pass against
a central finite-difference oracle.
"""

import os
import json
import zipfile

import numpy as np
import pytest

from icreg.predict import Prompt
from icreg.transformer import (
    FunctionClass,
    ICLConfig,
    ICLModel,
    TaskSampler,
    as_predictor,
    evaluate_incontext,
    forward,
    gradient_check,
    init_model,
    load_checkpoint,
    loss_and_grads,
    loss_mse,
    save_checkpoint,
    train,
    train_step,
)

TINY = dict(input_dim=2, embed_dim=8, layers=1, heads=2, n_max=3, seed=0)


def tiny_model(**overrides):
    cfg = ICLConfig(**{**TINY, **overrides})
    return init_model(cfg)


def tiny_batch(rng, batch=2, n=3, d=2):
    xs = rng.normal(size=(batch, n + 1, d))
    ys_full = rng.normal(size=(batch, n + 1))
    return xs, ys_full


class TestConfig:
    def test_defaults(self):
        cfg = ICLConfig(input_dim=5)
        assert cfg.embed_dim == 64
        assert cfg.layers == 2
        assert cfg.heads == 2
        assert cfg.n_max == 40
        assert cfg.learning_rate == 1e-3
        assert cfg.batch_size == 64

    def test_head_dim(self):
        assert ICLConfig(input_dim=5, embed_dim=64, heads=2).head_dim == 32

    def test_embed_dim_must_divide_heads(self):
        with pytest.raises(ValueError, match="divisible"):
            ICLConfig(input_dim=5, embed_dim=63, heads=2)

    def test_max_sequence(self):
        assert ICLConfig(input_dim=5, n_max=40).max_sequence == 81

    def test_input_dim_bounds(self):
        with pytest.raises(ValueError):
            ICLConfig(input_dim=0)
        with pytest.raises(ValueError):
            ICLConfig(input_dim=11)

    def test_negative_knobs_rejected(self):
        with pytest.raises(ValueError):
            ICLConfig(input_dim=2, learning_rate=-1e-3)
        with pytest.raises(ValueError):
            ICLConfig(input_dim=2, steps=-1)
        with pytest.raises(ValueError):
            ICLConfig(input_dim=2, layers=0)


class TestPrecision:
    def test_default_dtype_is_float64(self):
        cfg = ICLConfig(input_dim=5)
        assert cfg.dtype == "float64"
        model = tiny_model()
        assert all(v.dtype == np.float64 for v in model.params.values())

    def test_bad_dtype_rejected(self):
        with pytest.raises(ValueError, match="float32 or float64"):
            ICLConfig(input_dim=2, dtype="float16")

    def test_float32_model_stays_float32_through_training(self):
        model = tiny_model(dtype="float32", learning_rate=1e-3)
        rng = np.random.default_rng(3)
        for _ in range(5):
            xs, ys_full = tiny_batch(rng)
            loss = train_step(model, xs, ys_full)
            assert np.isfinite(loss)
        for name, value in model.params.items():
            assert value.dtype == np.float32, name
            assert model.adam_m[name].dtype == np.float32
            assert model.adam_v[name].dtype == np.float32

    def test_float32_init_is_cast_of_float64_init(self):
        a = tiny_model()
        b = tiny_model(dtype="float32")
        for name in a.params:
            np.testing.assert_array_equal(
                a.params[name].astype(np.float32), b.params[name]
            )

    def test_float32_forward_close_to_float64(self):
        rng = np.random.default_rng(4)
        xs, ys_full = tiny_batch(rng)
        out64 = forward(tiny_model(), xs, ys_full[:, :-1])
        out32 = forward(tiny_model(dtype="float32"), xs, ys_full[:, :-1])
        assert out32.dtype == np.float32
        np.testing.assert_allclose(out32, out64, rtol=1e-4, atol=1e-5)

    def test_float32_checkpoint_round_trip_preserves_dtype(self, tmp_path):
        model = tiny_model(dtype="float32")
        rng = np.random.default_rng(5)
        xs, ys_full = tiny_batch(rng)
        train_step(model, xs, ys_full)
        path = str(tmp_path / "f32.npz")
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        assert loaded.config.dtype == "float32"
        for name in model.params:
            assert loaded.params[name].dtype == np.float32
            np.testing.assert_array_equal(loaded.params[name], model.params[name])

    def test_gradient_check_requires_float64(self):
        model = tiny_model(dtype="float32")
        rng = np.random.default_rng(6)
        xs, ys_full = tiny_batch(rng)
        with pytest.raises(ValueError, match="float64"):
            gradient_check(model, xs, ys_full)


class TestInit:
    def test_same_seed_bit_identical(self):
        """Initialization is a pure function of the config."""
        a = tiny_model()
        b = tiny_model()
        assert sorted(a.params) == sorted(b.params)
        for name in a.params:
            np.testing.assert_array_equal(a.params[name], b.params[name])

    def test_different_seed_differs(self):
        a = tiny_model(seed=0)
        b = tiny_model(seed=1)
        assert not np.array_equal(a.params["embed_x/W"], b.params["embed_x/W"])

    def test_biases_zero_gains_one(self):
        m = tiny_model()
        np.testing.assert_array_equal(m.params["embed_x/b"], np.zeros(8))
        np.testing.assert_array_equal(m.params["block0/ln1/g"], np.ones(8))
        np.testing.assert_array_equal(m.params["readout/b"], np.zeros(1))

    def test_parameter_count_is_config_function(self):
        """d=2, D=8, L=1, n_max=3 has exactly 993 parameters.

        24 (x-embed) + 16 (y-embed) + 56 (positions) + 16+288+16 (block
        layer norms and attention) + 288+264 (MLP) + 16 (final norm)
        + 9 (readout).
        """
        assert tiny_model().num_parameters == 993

    def test_adam_state_starts_at_zero(self):
        m = tiny_model()
        assert m.step_count == 0
        for name in m.params:
            np.testing.assert_array_equal(m.adam_m[name], np.zeros_like(m.params[name]))


class TestForward:
    def test_identical_rows_identical_outputs(self):
        model = tiny_model()
        rng = np.random.default_rng(1)
        xs, ys_full = tiny_batch(rng, batch=1)
        stacked_x = np.repeat(xs, 4, axis=0)
        stacked_y = np.repeat(ys_full[:, :-1], 4, axis=0)
        preds = forward(model, stacked_x, stacked_y)
        for row in range(1, 4):
            np.testing.assert_array_equal(preds[row], preds[0])

    def test_causality_exact(self):
        """Perturbing tokens after position i leaves outputs at <= i unchanged.

        The prediction at x-position p sees context pairs 0..p-1 and the
        p-th input only, so edits to any later pair must have exactly zero
        effect, not merely a small one.
        """
        model = tiny_model(n_max=6)
        rng = np.random.default_rng(7)
        for trial in range(20):
            xs, ys_full = tiny_batch(rng, batch=2, n=6)
            ys = ys_full[:, :-1]
            base = forward(model, xs, ys)
            cut = int(rng.integers(0, 6))
            xs2, ys2 = xs.copy(), ys.copy()
            xs2[:, cut + 1 :] = rng.normal(size=xs2[:, cut + 1 :].shape)
            ys2[:, cut:] = rng.normal(size=ys2[:, cut:].shape)
            perturbed = forward(model, xs2, ys2)
            np.testing.assert_array_equal(perturbed[:, : cut + 1], base[:, : cut + 1])

    def test_zero_context_depends_only_on_query(self):
        model = tiny_model()
        rng = np.random.default_rng(2)
        q = rng.normal(size=(1, 1, 2))
        solo = forward(model, q, np.zeros((1, 0)))
        other = rng.normal(size=(3, 1, 2))
        batch = np.vstack([q, other])
        together = forward(model, batch, np.zeros((4, 0)))
        np.testing.assert_array_equal(together[0], solo[0])

    def test_sequence_too_long_rejected(self):
        model = tiny_model(n_max=3)
        rng = np.random.default_rng(0)
        xs, ys_full = tiny_batch(rng, n=4)
        with pytest.raises(ValueError, match="n_max"):
            forward(model, xs, ys_full[:, :-1])

    def test_bad_shapes_rejected(self):
        model = tiny_model()
        rng = np.random.default_rng(0)
        xs, ys_full = tiny_batch(rng)
        with pytest.raises(ValueError, match="ys"):
            forward(model, xs, ys_full)  # one label too many
        with pytest.raises(ValueError, match="shape"):
            forward(model, xs[:, :, :1], ys_full[:, :-1])

    def test_non_finite_batch_rejected(self):
        model = tiny_model()
        rng = np.random.default_rng(0)
        xs, ys_full = tiny_batch(rng)
        xs[0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            forward(model, xs, ys_full[:, :-1])


class TestLoss:
    def test_perfect_predictions(self):
        p = np.arange(6.0).reshape(2, 3)
        assert loss_mse(p, p.copy()) == 0.0

    def test_constant_offset_squares(self):
        """A uniform offset of c costs exactly c^2."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            t = rng.normal(size=(4, 5))
            c = float(rng.normal())
            np.testing.assert_allclose(loss_mse(t + c, t), c * c, rtol=1e-12)

    def test_single_element(self):
        assert loss_mse(np.array([[2.0]]), np.array([[0.0]])) == 4.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            loss_mse(np.zeros((2, 3)), np.zeros((3, 2)))


class TestGradients:
    def test_backward_matches_finite_differences(self):
        """Every parameter tensor agrees with the central-difference oracle.

        D=8, L=1, n=3 keeps the parameter count small enough to probe each
        coordinate twice; the spec bound is relative error below 1e-4 at
        h=1e-4 in 64-bit arithmetic.
        """
        model = tiny_model()
        rng = np.random.default_rng(11)
        xs, ys_full = tiny_batch(rng, batch=2, n=3)
        errors = gradient_check(model, xs, ys_full, h=1e-4)
        assert set(errors) == set(model.params)
        worst = max(errors.values())
        assert worst < 1e-4, f"worst relative error {worst:.3e}"

    def test_loss_and_grads_loss_matches_forward(self):
        model = tiny_model()
        rng = np.random.default_rng(5)
        xs, ys_full = tiny_batch(rng)
        loss, grads = loss_and_grads(model, xs, ys_full)
        preds = forward(model, xs, ys_full[:, :-1])
        np.testing.assert_allclose(loss, loss_mse(preds, ys_full), rtol=1e-15)
        assert set(grads) == set(model.params)


class TestTrainStep:
    def test_zero_learning_rate_freezes_parameters(self):
        model = tiny_model(learning_rate=0.0)
        before = {k: v.copy() for k, v in model.params.items()}
        rng = np.random.default_rng(0)
        xs, ys_full = tiny_batch(rng)
        train_step(model, xs, ys_full)
        for name in before:
            np.testing.assert_array_equal(model.params[name], before[name])
        assert model.step_count == 1

    def test_same_seed_identical_trajectories(self):
        """Training is bit-deterministic given the config and sampler seeds."""
        runs = []
        for _ in range(2):
            model = tiny_model(learning_rate=1e-3)
            sampler = TaskSampler(input_dim=2, seed=42)
            losses = []
            for _ in range(25):
                xs, ys_full = sampler.sample_batch(4, 3)
                losses.append(train_step(model, xs, ys_full))
            runs.append((losses, model))
        np.testing.assert_array_equal(runs[0][0], runs[1][0])
        for name in runs[0][1].params:
            np.testing.assert_array_equal(runs[0][1].params[name], runs[1][1].params[name])

    def test_non_finite_loss_reports_step_index(self):
        model = tiny_model()
        model.params["readout/W"][:] = np.nan
        rng = np.random.default_rng(0)
        xs, ys_full = tiny_batch(rng)
        with pytest.raises(FloatingPointError, match="optimizer step 1"):
            train_step(model, xs, ys_full)

    def test_returns_pre_update_loss(self):
        model = tiny_model()
        rng = np.random.default_rng(9)
        xs, ys_full = tiny_batch(rng)
        expected = loss_mse(forward(model, xs, ys_full[:, :-1]), ys_full)
        np.testing.assert_allclose(train_step(model, xs, ys_full), expected, rtol=1e-15)


class TestTrain:
    def test_zero_steps_returns_initialized_model(self):
        cfg = ICLConfig(**{**TINY, "steps": 0})
        model, losses = train(cfg, TaskSampler(input_dim=2, seed=0))
        fresh = init_model(cfg)
        assert losses.shape == (0,)
        for name in fresh.params:
            np.testing.assert_array_equal(model.params[name], fresh.params[name])

    def test_loss_curve_length(self):
        cfg = ICLConfig(**{**TINY, "steps": 17})
        _, losses = train(cfg, TaskSampler(input_dim=2, seed=0))
        assert losses.shape == (17,)

    def test_loss_decreases_directionally(self):
        """On noiseless linear tasks the late losses beat the early ones."""
        cfg = ICLConfig(
            input_dim=1, embed_dim=16, layers=1, heads=2, n_max=8,
            learning_rate=3e-3, batch_size=16, steps=200, seed=0,
        )
        _, losses = train(cfg, TaskSampler(input_dim=1, seed=0))
        assert losses[-50:].mean() < losses[:20].mean()

    def test_checkpoint_cadence(self, tmp_path):
        """Checkpoints land every steps//10 updates plus at the end."""
        cfg = ICLConfig(**{**TINY, "steps": 20})
        train(cfg, TaskSampler(input_dim=2, seed=0), checkpoint_dir=str(tmp_path))
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == [f"step{s:06d}.npz" for s in range(2, 21, 2)]

    def test_checkpoint_cadence_short_run(self, tmp_path):
        cfg = ICLConfig(**{**TINY, "steps": 3})
        train(cfg, TaskSampler(input_dim=2, seed=0), checkpoint_dir=str(tmp_path))
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["step000001.npz", "step000002.npz", "step000003.npz"]


class ConstantTaskStub:
    """x-independent tasks: noisy constant context labels, noiseless query.

    The averaging baseline's error on these is exactly sigma^2 / k in
    expectation, which pins the evaluation plumbing to a closed form.
    """

    def __init__(self, d, sigma, seed):
        self.d = d
        self.sigma = sigma
        self.rng = np.random.default_rng(seed)

    def sample_batch(self, batch_size, n_context):
        xs = self.rng.normal(size=(batch_size, n_context + 1, self.d))
        c = self.rng.normal(size=(batch_size, 1))
        ys = np.repeat(c, n_context + 1, axis=1)
        if n_context > 0:
            ys[:, :-1] += self.rng.normal(0.0, self.sigma, size=(batch_size, n_context))
        return xs, ys


class TestEvaluate:
    def test_one_entry_per_requested_length(self):
        model = tiny_model(n_max=3)
        points = evaluate_incontext(model, TaskSampler(input_dim=2, seed=0), [0, 1, 3],
                                    tasks_per_point=8)
        assert [p.k for p in points] == [0, 1, 3]
        assert all(np.isfinite(p.model_mse) and np.isfinite(p.baseline_mse) for p in points)

    def test_length_beyond_n_max_rejected(self):
        model = tiny_model(n_max=3)
        with pytest.raises(ValueError, match="n_max"):
            evaluate_incontext(model, TaskSampler(input_dim=2, seed=0), [4])

    def test_averaging_baseline_closed_form(self):
        """Baseline MSE is sigma^2/k on constant tasks with noisy context."""
        model = tiny_model(n_max=8)
        sigma = 0.5
        for k in (1, 2, 4, 8):
            stub = ConstantTaskStub(d=2, sigma=sigma, seed=100 + k)
            (point,) = evaluate_incontext(model, stub, [k], tasks_per_point=4000)
            np.testing.assert_allclose(point.baseline_mse, sigma * sigma / k, rtol=0.15)

    def test_zero_context_baseline_predicts_zero(self):
        model = tiny_model(n_max=3)
        sampler = TaskSampler(input_dim=2, seed=3)
        check = TaskSampler(input_dim=2, seed=3)
        (point,) = evaluate_incontext(model, sampler, [0], tasks_per_point=500)
        _, ys_full = check.sample_batch(500, 0)
        np.testing.assert_allclose(point.baseline_mse, np.mean(ys_full[:, -1] ** 2), rtol=1e-12)


class TestSampler:
    def test_rows_are_exact_linear_tasks(self):
        """Each batch row satisfies y = X w for some per-row w."""
        sampler = TaskSampler(input_dim=3, seed=0)
        xs, ys = sampler.sample_batch(16, 8)
        fitted = []
        for row in range(16):
            w, residual, *_ = np.linalg.lstsq(xs[row], ys[row], rcond=None)
            assert residual[0] < 1e-20
            fitted.append(w)
        fitted = np.asarray(fitted)
        spread = np.ptp(fitted, axis=0)
        assert np.all(spread > 0), "weight vectors must be fresh per row"

    def test_quadratic_squares_the_linear_response(self):
        lin = TaskSampler(input_dim=3, seed=5)
        quad = TaskSampler(input_dim=3, function_class=FunctionClass.QUADRATIC, seed=5)
        xs_l, ys_l = lin.sample_batch(8, 4)
        xs_q, ys_q = quad.sample_batch(8, 4)
        np.testing.assert_array_equal(xs_q, xs_l)
        np.testing.assert_allclose(ys_q, ys_l * ys_l, rtol=1e-15)

    def test_noise_magnitude(self):
        clean = TaskSampler(input_dim=2, seed=7)
        noisy = TaskSampler(input_dim=2, noise_std=0.5, seed=7)
        _, ys_c = clean.sample_batch(400, 10)
        _, ys_n = noisy.sample_batch(400, 10)
        np.testing.assert_allclose(np.var(ys_n - ys_c), 0.25, rtol=0.1)

    def test_same_seed_identical_stream(self):
        a = TaskSampler(input_dim=2, seed=1)
        b = TaskSampler(input_dim=2, seed=1)
        xs_a, ys_a = a.sample_batch(4, 3)
        xs_b, ys_b = b.sample_batch(4, 3)
        np.testing.assert_array_equal(xs_a, xs_b)
        np.testing.assert_array_equal(ys_a, ys_b)

    def test_consecutive_batches_differ(self):
        s = TaskSampler(input_dim=2, seed=1)
        xs1, _ = s.sample_batch(4, 3)
        xs2, _ = s.sample_batch(4, 3)
        assert not np.array_equal(xs1, xs2)

    def test_validation(self):
        with pytest.raises(ValueError, match="input_dim"):
            TaskSampler(input_dim=0)
        with pytest.raises(ValueError, match="noise_std"):
            TaskSampler(input_dim=2, noise_std=-0.1)


class TestAsPredictor:
    def _prompt(self, rng, d=2, k=3):
        return Prompt(
            context_x=rng.normal(size=(k, d)),
            context_y=rng.normal(size=k),
            query=rng.normal(size=d),
        )

    def test_value_matches_forward_last_position(self):
        model = tiny_model()
        rng = np.random.default_rng(21)
        predictor = as_predictor(model)
        prompt = self._prompt(rng)
        got = predictor(prompt)
        xs = np.vstack([prompt.context_x, prompt.query[None, :]])[None]
        expected = forward(model, xs, prompt.context_y[None, :])[0, -1]
        np.testing.assert_allclose(got.value, expected, rtol=1e-15)
        assert got.predictor == "icl"

    def test_dimension_mismatch_rejected(self):
        model = tiny_model()
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError, match="input_dim"):
            as_predictor(model)(self._prompt(rng, d=4))

    def test_context_beyond_n_max_rejected(self):
        model = tiny_model(n_max=3)
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError, match="n_max"):
            as_predictor(model)(self._prompt(rng, k=4))


class TestCheckpoint:
    def _trained(self):
        model = tiny_model()
        sampler = TaskSampler(input_dim=2, seed=0)
        for _ in range(5):
            xs, ys_full = sampler.sample_batch(4, 3)
            train_step(model, xs, ys_full)
        return model

    def test_round_trip_bit_exact(self, tmp_path):
        """Weights, optimizer state, and step count all survive a save/load."""
        model = self._trained()
        path = str(tmp_path / "model.npz")
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        assert loaded.config == model.config
        assert loaded.step_count == model.step_count
        for name in model.params:
            np.testing.assert_array_equal(loaded.params[name], model.params[name])
            np.testing.assert_array_equal(loaded.adam_m[name], model.adam_m[name])
            np.testing.assert_array_equal(loaded.adam_v[name], model.adam_v[name])

    def test_bytes_deterministic(self, tmp_path):
        model = self._trained()
        p1, p2 = str(tmp_path / "a.npz"), str(tmp_path / "b.npz")
        save_checkpoint(model, p1)
        save_checkpoint(model, p2)
        with open(p1, "rb") as f1, open(p2, "rb") as f2:
            assert f1.read() == f2.read()

    def test_resumed_training_continues_deterministically(self, tmp_path):
        """Save/load preserves enough state to reproduce further updates."""
        model = self._trained()
        path = str(tmp_path / "model.npz")
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        rng = np.random.default_rng(33)
        xs, ys_full = tiny_batch(rng)
        loss_a = train_step(model, xs, ys_full)
        loss_b = train_step(loaded, xs, ys_full)
        assert loss_a == loss_b
        for name in model.params:
            np.testing.assert_array_equal(model.params[name], loaded.params[name])

    def test_foreign_file_rejected(self, tmp_path):
        path = tmp_path / "junk.npz"
        with zipfile.ZipFile(path, "w") as zf:
            zf.writestr("manifest.json", json.dumps({"format": "other"}))
        with pytest.raises(ValueError, match="not a model checkpoint"):
            load_checkpoint(str(path))

    def test_missing_manifest_rejected(self, tmp_path):
        path = tmp_path / "empty.npz"
        with zipfile.ZipFile(path, "w") as zf:
            zf.writestr("readme.txt", "nothing here")
        with pytest.raises(KeyError):
            load_checkpoint(str(path))
