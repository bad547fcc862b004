import numpy as np
import pytest

from plcnoise import nn
from plcnoise.errors import ConfigError, InvalidParamError, ShapeError
from plcnoise.gan import (
    GanConfig,
    build_model,
    critic_loss,
    desk_config,
    generate,
    generator_loss,
    load_model,
    save_model,
    train,
)
from plcnoise.rng import Rng
from plcnoise.synth import desk_fresh_config, gen_fresh
from plcnoise.traces import TraceSet, normalize_maxabs

TOY = GanConfig(latent_dim=5, base_len=4, base_ch=8, blocks=2, kernel_len=5,
                batch=2, dropout=0.0, sample_rate_hz=1e3)


@pytest.fixture(scope="module")
def tiny_data():
    ts = gen_fresh(desk_fresh_config(), 72, 1024, Rng(50))
    ts, _ = normalize_maxabs(ts)
    return ts


class TestConfig:
    def test_default_ladders_match_published_architecture(self):
        cfg = GanConfig()
        assert cfg.trace_len == 16384
        assert cfg.g_channels() == [(1024, 512), (512, 256), (256, 128),
                                    (128, 64), (64, 1)]
        assert cfg.d_channels() == [(1, 64), (64, 128), (128, 256),
                                    (256, 512), (512, 1024)]

    def test_desk_scale_trace_len(self):
        assert desk_config().trace_len == 1024  # 16 * 4**3

    def test_ladder_property_sweep(self):
        for base_len, blocks, base_ch in [(4, 1, 4), (8, 2, 16), (16, 3, 64),
                                          (16, 5, 1024), (32, 4, 256)]:
            cfg = GanConfig(latent_dim=7, base_len=base_len, base_ch=base_ch,
                            blocks=blocks, kernel_len=5, batch=2)
            length = base_len
            for _ in range(blocks):
                length *= 4
            assert cfg.trace_len == length
            assert cfg.g_channels()[-1][1] == 1
            assert cfg.d_channels()[-1][1] == base_ch
            model = build_model(cfg, Rng(0))
            assert model.critic.dense.weights.shape == (base_len * base_ch, 1)

    def test_invalid_configs(self):
        with pytest.raises(ConfigError):
            GanConfig(batch=1)
        with pytest.raises(ConfigError):
            GanConfig(base_ch=24, blocks=5)
        with pytest.raises(ConfigError):
            GanConfig(upsample_mode="bicubic")

    def test_json_round_trip_and_digest(self):
        cfg = desk_config(epochs=3)
        back = GanConfig.from_json(cfg.to_json())
        assert back == cfg
        assert back.digest() == cfg.digest()


class TestForward:
    def test_generator_output_shape_and_range(self):
        model = build_model(TOY, Rng(1))
        z = Rng(2).uniform(2 * 5).reshape(2, 5).astype(np.float32)
        out = model.generator.forward(z, training=False)
        assert out.shape == (2, TOY.trace_len, 1)
        assert np.all(np.abs(out) < 1.0)

    def test_generator_deterministic(self):
        model = build_model(TOY, Rng(1))
        z = Rng(2).uniform(2 * 5).reshape(2, 5).astype(np.float32)
        a = model.generator.forward(z, training=False)
        b = model.generator.forward(z, training=False)
        assert np.array_equal(a, b)

    def test_zero_latent_finite(self):
        model = build_model(TOY, Rng(1))
        out = model.generator.forward(np.zeros((2, 5), dtype=np.float32),
                                      training=False)
        assert np.all(np.isfinite(out))

    def test_critic_scores_batch(self):
        model = build_model(TOY, Rng(1))
        x = Rng(3).uniform(3 * TOY.trace_len).reshape(3, TOY.trace_len, 1)
        scores = model.critic.forward(x.astype(np.float32), training=False)
        assert scores.shape == (3,)
        assert np.all(np.isfinite(scores))

    def test_critic_rejects_wrong_length(self):
        model = build_model(TOY, Rng(1))
        with pytest.raises(ShapeError):
            model.critic.forward(np.zeros((2, TOY.trace_len + 4, 1),
                                          dtype=np.float32), training=False)

    def test_critic_bias_shift_moves_all_scores_equally(self):
        model = build_model(TOY, Rng(1))
        x = Rng(4).uniform(2 * TOY.trace_len).reshape(2, TOY.trace_len, 1)
        x = x.astype(np.float32)
        base = model.critic.forward(x, training=False)
        model.critic.dense.bias += 1.5
        shifted = model.critic.forward(x, training=False)
        assert np.allclose(shifted - base, 1.5, atol=1e-5)


class TestLosses:
    def test_critic_loss_examples(self):
        assert critic_loss(np.array([1.0, 1.0]), np.array([1.0, 1.0])) == 0.0
        assert critic_loss(np.array([1.0, 1.0]), np.array([0.0, 0.0])) == -1.0

    def test_critic_loss_shift_invariance(self):
        r = np.array([0.3, -0.2, 1.1])
        f = np.array([0.9, 0.1, -0.4])
        assert critic_loss(r + 5.0, f + 5.0) == pytest.approx(critic_loss(r, f))

    def test_critic_loss_shape_check(self):
        with pytest.raises(ShapeError):
            critic_loss(np.zeros(3), np.zeros(4))

    def test_generator_loss_examples(self):
        assert generator_loss(np.array([0.0])) == 0.0
        assert generator_loss(np.array([2.0, 4.0])) == -3.0
        assert generator_loss(3.0 * np.array([2.0, 4.0])) == pytest.approx(-9.0)


class TestTraining:
    def test_zero_epochs_returns_initial_model(self, tiny_data):
        cfg = desk_config(epochs=0)
        model = build_model(cfg, Rng(1))
        before = {k: v.copy() for k, v in model.params().items()}
        model, hist = train(model, tiny_data, cfg, Rng(1))
        assert hist.epoch == []
        for k, v in model.params().items():
            assert np.array_equal(v, before[k])

    def test_one_epoch_history_finite(self, tiny_data):
        cfg = desk_config(epochs=1, batch=64, holdout_frac=0.0)
        model = build_model(cfg, Rng(2))
        model, hist = train(model, tiny_data, cfg, Rng(2))
        assert len(hist.epoch) == 1
        assert np.isfinite(hist.d_loss[0]) and np.isfinite(hist.g_loss[0])

    def test_critic_weights_clipped_after_every_step(self, tiny_data, monkeypatch):
        cfg = desk_config(epochs=2, batch=32, holdout_frac=0.0)
        model = build_model(cfg, Rng(3))
        critic_param_ids = {id(v) for v in model.critic.params().values()}
        seen = []
        orig = nn.Adam.step

        def checked(self, grads):
            orig(self, grads)
            if id(next(iter(self.params.values()))) in critic_param_ids:
                assert self.clip_value == cfg.clip_value
                worst = max(float(np.abs(v).max()) for v in self.params.values())
                seen.append(worst)
                assert worst <= cfg.clip_value

        monkeypatch.setattr(nn.Adam, "step", checked)
        train(model, tiny_data, cfg, Rng(3))
        assert len(seen) >= 2  # critic actually stepped

    def test_training_data_must_be_normalized(self, tiny_data):
        cfg = desk_config(epochs=1)
        model = build_model(cfg, Rng(1))
        bad = TraceSet(tiny_data.data64() * 3.0, tiny_data.sample_rate_hz)
        with pytest.raises(ConfigError, match="normalized"):
            train(model, bad, cfg, Rng(1))

    def test_trace_length_mismatch(self, tiny_data):
        cfg = desk_config(epochs=1, blocks=2, base_ch=32)  # trace_len 256
        model = build_model(cfg, Rng(1))
        with pytest.raises(ConfigError, match="trace length"):
            train(model, tiny_data, cfg, Rng(1))

    def test_two_runs_bitwise_identical(self, tiny_data, tmp_path):
        cfg = desk_config(epochs=2, batch=32, eval_every=1)
        outs = []
        for run in ("a", "b"):
            d = tmp_path / run
            d.mkdir()
            model = build_model(cfg, Rng(9))
            train(model, tiny_data, cfg, Rng(9), checkpoint_dir=str(d))
            outs.append((d / "epoch_002.ckpt").read_bytes())
        assert outs[0] == outs[1]

    def test_early_stopping_can_trigger(self, tiny_data):
        cfg = desk_config(epochs=30, batch=32, eval_every=1,
                          early_stop_patience=1)
        model = build_model(cfg, Rng(5))
        model, hist = train(model, tiny_data, cfg, Rng(5))
        assert len(hist.epoch) <= 30


class TestGenerate:
    def test_count_validated(self):
        model = build_model(TOY, Rng(1))
        with pytest.raises(InvalidParamError):
            generate(model, 0, Rng(0))

    def test_deterministic_per_seed(self):
        model = build_model(TOY, Rng(1))
        a = generate(model, 3, Rng(9))
        b = generate(model, 3, Rng(9))
        assert np.array_equal(a.data, b.data)

    def test_untrained_model_metrics_computable(self):
        from plcnoise.features import feature_matrix8

        model = build_model(TOY, Rng(1))
        ts = generate(model, 12, Rng(7))
        assert len(ts) == 12 and ts.trace_len == TOY.trace_len
        assert np.all(np.abs(ts.data) < 1.0)
        feats = feature_matrix8(ts)
        assert np.all(np.isfinite(feats))

    def test_per_trace_substreams(self):
        model = build_model(TOY, Rng(1))
        five = generate(model, 5, Rng(9))
        two = generate(model, 2, Rng(9))
        assert np.array_equal(five.data[:2], two.data)


class TestCheckpoint:
    def test_save_load_round_trip(self, tmp_path):
        model = build_model(TOY, Rng(4))
        path = tmp_path / "m.ckpt"
        save_model(path, model)
        back, blobs = load_model(path)
        assert back.cfg == model.cfg
        for k, v in model.params().items():
            assert np.array_equal(back.params()[k], v)
        assert blobs["meta.config_hash"] == model.cfg.digest().encode()

    def test_generation_identical_after_reload(self, tmp_path):
        model = build_model(TOY, Rng(4))
        save_model(tmp_path / "m.ckpt", model)
        back, _ = load_model(tmp_path / "m.ckpt")
        a = generate(model, 3, Rng(2))
        b = generate(back, 3, Rng(2))
        assert np.array_equal(a.data, b.data)

    def test_resume_continues_epoch_count(self, tiny_data, tmp_path):
        cfg = desk_config(epochs=2, batch=32, holdout_frac=0.0)
        model = build_model(cfg, Rng(6))
        model, hist1 = train(model, tiny_data, cfg, Rng(6),
                             checkpoint_dir=str(tmp_path))
        assert hist1.epoch == [1, 2]
        resumed, _ = load_model(tmp_path / "epoch_002.ckpt")
        assert resumed.epoch == 2
        resumed, hist2 = train(resumed, tiny_data, cfg, Rng(6))
        assert hist2.epoch == [3, 4]

    def test_resume_restores_optimizer_state(self, tiny_data, tmp_path, monkeypatch):
        cfg = desk_config(epochs=2, batch=32, holdout_frac=0.0)
        model = build_model(cfg, Rng(11))
        model, _ = train(model, tiny_data, cfg, Rng(11),
                         checkpoint_dir=str(tmp_path))
        from plcnoise.gan import load_model as _load

        model2, blobs = _load(tmp_path / "epoch_002.ckpt")
        saved_t = int(blobs["opt_g.t"])
        assert saved_t > 0

        seen = []
        orig = nn.Adam.load_state_blobs

        def spy(self, prefix, state):
            orig(self, prefix, state)
            seen.append((prefix, self.t))

        monkeypatch.setattr(nn.Adam, "load_state_blobs", spy)
        one_more = desk_config(epochs=1, batch=32, holdout_frac=0.0)
        train(model2, tiny_data, one_more, Rng(11), resume_state=blobs)
        assert ("opt_g", saved_t) in seen
        assert any(p == "opt_c" and t > 0 for p, t in seen)
