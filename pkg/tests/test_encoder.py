import numpy as np
import pytest

from asrshrink.bench.macs import decoder_macs, layer_macs
from asrshrink.encoder import (
    CheckpointError, EncoderConfig, ExitDecoder, ForwardMode, ModeError, SpeechEncoder, layerdrop_schedule,
    load_checkpoint, remove_layers, save_checkpoint,
)
from asrshrink.exitpolicy import ExitPolicy
from asrshrink.numkit import MacCounter, ShapeError, Tensor
from asrshrink.util.rng import generator

from conftest import TINY_ENCODER, TINY_FRONTEND, random_frames, tiny_model


class TestForwardModes:
    def test_layerdrop_zero_is_full(self, model):
        frames = random_frames(12, 8)
        full = model.forward(frames, ForwardMode.full())
        dropped = model.forward(frames, ForwardMode.layerdrop(0.0, seed=3))
        np.testing.assert_array_equal(full.probs.data, dropped.probs.data)
        assert dropped.executed_layers == [1, 2, 3, 4]

    def test_removal_of_nothing_is_full(self, model):
        frames = random_frames(12, 8)
        full = model.forward(frames)
        kept = model.forward(frames, ForwardMode.removal(4))
        np.testing.assert_array_equal(full.probs.data, kept.probs.data)

    def test_removal_runs_prefix(self, model):
        ctx = MacCounter()
        result = model.forward(random_frames(6, 8), ForwardMode.removal(2), ctx)
        assert result.executed_layers == [1, 2]
        assert result.exit_layer == 2
        assert sorted(k for k in ctx.per_stage if k.startswith('layer')) == ['layer1', 'layer2']
        assert 'decoder4' in ctx.per_stage

    def test_deterministic(self, model):
        frames = random_frames(9, 8)
        mode = ForwardMode.layerdrop(0.5, seed=17)
        np.testing.assert_array_equal(model.forward(frames, mode).probs.data, model.forward(frames, mode).probs.data)

    def test_layerdrop_follows_schedule(self, model):
        frames = random_frames(5, 8)
        for seed in range(10):
            kept = layerdrop_schedule(4, 0.5, seed)
            result = model.forward(frames, ForwardMode.layerdrop(0.5, seed=seed))
            assert result.executed_layers == [i + 1 for i in range(4) if kept[i]]

    def test_layerdrop_rate(self):
        executed = [layerdrop_schedule(8, 0.5, seed).sum() for seed in range(10000)]
        assert 0.49 <= np.mean(executed) / 8 <= 0.51

    def test_layerdrop_everything_skipped_still_decodes(self, model):
        result = model.forward(random_frames(4, 8), ForwardMode.layerdrop(1.0))
        assert result.executed_layers == []
        np.testing.assert_allclose(result.probs.data.sum(axis=1), 1.0, atol=1e-9)

    @pytest.mark.parametrize('mode', [ForwardMode.removal(5), ForwardMode.removal(0), ForwardMode.layerdrop(1.5),
                                      ForwardMode.layerdrop(-0.1)])
    def test_invalid_modes(self, model, mode):
        with pytest.raises(ModeError):
            model.forward(random_frames(4, 8), mode)

    def test_unknown_mode(self):
        with pytest.raises(ModeError):
            ForwardMode('skip')

    def test_mac_additivity(self, model):
        frames = random_frames(7, 8)
        ctx = MacCounter()
        result = model.forward(frames, ForwardMode.layerdrop(0.5, seed=2), ctx)
        expected = len(result.executed_layers) * layer_macs(model.config, 7) + decoder_macs(model.config, 7)
        assert ctx.total == expected

    def test_wrong_frame_width(self, model):
        with pytest.raises(ShapeError):
            model.forward(random_frames(4, 9))


class TestEarlyExit:
    def test_large_threshold_exits_first(self, model):
        policy = ExitPolicy({'threshold': 1e6})
        result = model.forward(random_frames(6, 8), ForwardMode.early_exit(policy))
        assert result.exit_layer == 2
        assert result.decoders_run == [2]
        assert result.executed_layers == [1, 2]

    def test_zero_threshold_runs_everything(self, model):
        policy = ExitPolicy({'threshold': 0.0})
        result = model.forward(random_frames(6, 8), ForwardMode.early_exit(policy))
        assert result.exit_layer == 4
        assert result.decoders_run == [2, 3, 4]
        assert [layer for layer, _ in result.trace] == [2, 3, 4]

    def test_exit_output_matches_full_walk(self, model):
        frames = random_frames(8, 8)
        walked = model.forward(frames, ForwardMode.early_exit({'threshold': 0.0}))
        full = model.forward(frames)
        np.testing.assert_array_equal(walked.probs.data, full.probs.data)

        entropies = dict(walked.trace)
        for layer in (2, 3):
            exited = model.forward(frames, ForwardMode.early_exit({'threshold': entropies[layer] + 1e-12}))
            assert exited.exit_layer <= layer
            j = exited.exit_layer
            expected = model.decode_head(full.layer_outputs[j - 1], j)
            np.testing.assert_array_equal(exited.probs.data, expected.data)

    def test_similarity_skips_intermediate_decoders(self, model):
        policy = ExitPolicy({'heuristic': 'similarity', 'threshold': 1.0})
        ctx = MacCounter()
        result = model.forward(random_frames(6, 8), ForwardMode.early_exit(policy), ctx)
        assert result.decoders_run == [result.exit_layer]
        assert sum(1 for k in ctx.per_stage if k.startswith('decoder')) == 1

    def test_similarity_low_threshold_exits_first(self, model):
        policy = ExitPolicy({'heuristic': 'similarity', 'threshold': -0.999})
        result = model.forward(random_frames(6, 8), ForwardMode.early_exit(policy))
        assert result.exit_layer == 2
        assert result.decoders_run == [2]

    def test_needs_exit_decoders(self):
        plain = tiny_model(exits=False)
        with pytest.raises(ModeError):
            plain.forward(random_frames(4, 8), ForwardMode.early_exit({'threshold': 0.1}))

    def test_missing_policy(self, model):
        with pytest.raises(ModeError):
            model.forward(random_frames(4, 8), ForwardMode(ForwardMode.EARLY_EXIT))


class TestDecodeHead:
    def test_rows_are_distributions(self, model):
        probs = model.decode_head(Tensor(random_frames(10, 8)))
        assert probs.shape == (10, 28)
        np.testing.assert_allclose(probs.data.sum(axis=1), 1.0, atol=1e-9)

    def test_doubled_output(self):
        decoder = ExitDecoder(generator(0, 'd'), 8, 28, double_output=True)
        probs = decoder(random_frames(10, 8))
        assert probs.shape == (20, 28)
        np.testing.assert_allclose(probs.data.sum(axis=1), 1.0, atol=1e-9)

    def test_zero_weights_give_uniform_rows(self):
        decoder = ExitDecoder(generator(0, 'd'), 8, 28)
        for p in decoder.parameters():
            p.assign(np.zeros(p.shape))
        np.testing.assert_allclose(decoder(random_frames(5, 8)).data, 1.0 / 28, atol=1e-15)

    def test_dimension_mismatch(self):
        decoder = ExitDecoder(generator(0, 'd'), 8, 28)
        with pytest.raises(ShapeError):
            decoder(random_frames(5, 6))

    def test_no_decoder_at_layer(self, model):
        with pytest.raises(ModeError):
            model.decode_head(Tensor(random_frames(3, 8)), layer=1)

    def test_macs(self, model):
        ctx = MacCounter()
        model.decode_head(Tensor(random_frames(10, 8)), 4, ctx)
        assert ctx.total == 10 * (8 * 8 + 8 * 28)
        assert ctx.per_stage == {'decoder4': ctx.total}


class TestRemoveLayers:
    def test_keeps_prefix_and_final_decoder(self, model):
        pruned = remove_layers(model, 2)
        assert pruned.num_layers == 2
        assert sorted(pruned.decoders) == [2]
        assert pruned.num_parameters() < model.num_parameters()
        np.testing.assert_array_equal(pruned.decoders[2].out.weight.data, model.decoders[4].out.weight.data)
        np.testing.assert_array_equal(pruned.layers[1].ff_in.weight.data, model.layers[1].ff_in.weight.data)
        assert model.num_layers == 4

    def test_half_of_twenty_four(self):
        big = SpeechEncoder(dict(TINY_ENCODER, L=24, first_exit=None), TINY_FRONTEND)
        pruned = remove_layers(big, 12)
        assert pruned.num_layers == 12
        assert sorted(pruned.decoders) == [12]

    def test_keep_all_is_identical(self, model):
        same = remove_layers(model, 4)
        state, original = same.state_dict(), model.state_dict()
        assert sorted(state) == sorted(original)
        for name in state:
            np.testing.assert_array_equal(state[name], original[name])

    @pytest.mark.parametrize('keep', [0, 5, 2.0])
    def test_out_of_range(self, model, keep):
        with pytest.raises(ModeError):
            remove_layers(model, keep)

    def test_keep_one_costs_one_layer(self, model):
        pruned = remove_layers(model, 1)
        signal = generator(0, 'signal').normal(size=3200)
        ctx = MacCounter()
        pruned.run(signal, ctx=ctx)

        cfg = pruned.config
        n = pruned.frontend_params.frames(3200)
        assert ctx.total == pruned.frontend_params.macs(3200) + layer_macs(cfg, n) + decoder_macs(cfg, n)

    def test_pruned_keeps_tapped_decoders_below(self, model):
        pruned = remove_layers(model, 3)
        assert sorted(pruned.decoders) == [2, 3]
        result = pruned.forward(random_frames(5, 8), ForwardMode.early_exit({'threshold': 0.0}))
        assert result.exit_layer == 3


class TestConfig:
    def test_defaults(self):
        cfg = EncoderConfig().validate()
        assert (cfg.L, cfg.A, cfg.ff_dim(), cfg.exit_start()) == (8, 64, 256, 4)
        assert cfg.exit_layers() == [4, 5, 6, 7, 8]

    def test_heads_must_divide(self):
        with pytest.raises(ValueError):
            EncoderConfig({'A': 10, 'H': 4}).validate()

    def test_frontend_width_must_match(self):
        with pytest.raises(ShapeError):
            SpeechEncoder(dict(TINY_ENCODER, A=16), TINY_FRONTEND)


class TestCheckpoint:
    def test_round_trip(self, model, tmp_path):
        path = str(tmp_path / 'model.npz')
        save_checkpoint(model, path, note='toy')
        loaded, meta = load_checkpoint(path)

        assert meta == {'note': 'toy'}
        assert loaded.config == model.config
        frames = random_frames(6, 8)
        np.testing.assert_array_equal(loaded.forward(frames).probs.data, model.forward(frames).probs.data)
        assert all(p.frozen for p in loaded.frontend.parameters())

    def test_round_trip_learned_adapter(self, tmp_path):
        model = tiny_model({'method': 'learned_conv', 'factor': 2, 'seed': 4})
        model.adapter.kernel.assign(np.linspace(0.0, 1.0, 160))
        path = str(tmp_path / 'model.npz')
        save_checkpoint(model, path)
        loaded, _ = load_checkpoint(path)
        np.testing.assert_array_equal(loaded.adapter.kernel.data, np.linspace(0.0, 1.0, 160))

    def test_round_trip_pruned(self, model, tmp_path):
        pruned = remove_layers(model, 3)
        path = str(tmp_path / 'pruned.npz')
        save_checkpoint(pruned, path)
        loaded, _ = load_checkpoint(path)
        assert loaded.num_layers == 3
        frames = random_frames(6, 8)
        np.testing.assert_array_equal(loaded.forward(frames).probs.data, pruned.forward(frames).probs.data)

    def test_missing_header(self, tmp_path):
        path = str(tmp_path / 'bare.npz')
        with open(path, 'wb') as f:
            np.savez(f, weights=np.ones(3))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
