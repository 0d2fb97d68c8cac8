import numpy as np
import pytest

from asrshrink.adapters import (
    AdapterError, DownsampleMethod, DownsampleSpec, Downsampler, Frontend, FrontendParams, adapter_macs,
    anti_alias_filter, avg_downsample, conv_downsample, decimate, frontend, init_conv_kernel,
)
from asrshrink.corpus import Waveform, synth
from asrshrink.numkit import MacCounter, backward, sum_all
from asrshrink.util.config import ConfigError
from asrshrink.util.rng import generator


def _delta(size=160):
    kernel = np.zeros(size)
    kernel[0] = 1.0
    return kernel


class TestDecimate:
    def test_raw_keeps_every_kth_sample(self):
        x = np.arange(8.0)
        np.testing.assert_array_equal(decimate(x, 2, anti_alias=False).data, [0.0, 2.0, 4.0, 6.0])

    def test_length(self):
        assert decimate(np.arange(10.0), 3).shape == (3,)

    def test_constant_passes_the_low_pass(self):
        out = decimate(np.full(500, 0.37), 3)
        np.testing.assert_allclose(out.data, 0.37, atol=1e-9)

    def test_filter_has_unit_dc_gain(self):
        for k in (2, 3, 4):
            taps = anti_alias_filter(k)
            assert len(taps) == 63
            assert taps.sum() == pytest.approx(1.0, abs=1e-12)

    def test_factor_one_is_identity(self):
        wave = synth('abc')
        assert decimate(wave, 1) is wave

    def test_waveform_rate(self):
        out = decimate(synth('abc'), 2)
        assert isinstance(out, Waveform)
        assert out.rate_hz == 8000
        assert len(out) == 960

    def test_short_signal(self):
        with pytest.raises(AdapterError):
            decimate(np.ones(2), 3)

    def test_removes_aliasing_tone(self):
        # 7 kHz folds onto 1 kHz at 8 kHz; the filter keeps almost none of it
        t = np.arange(4000) / 16000.0
        tone = np.sin(2.0 * np.pi * 7000.0 * t)
        raw = decimate(tone, 2, anti_alias=False).data
        filtered = decimate(tone, 2).data
        assert np.abs(filtered[100:-100]).max() < 0.05 * np.abs(raw).max()


class TestAverage:
    def test_constant_interior(self):
        out = avg_downsample(np.full(100, 2.5), 2).data
        interior = [i for i in range(len(out)) if i * 2 + 16 <= 100]
        np.testing.assert_allclose(out[interior], 2.5, atol=1e-12)

    def test_length(self):
        assert avg_downsample(np.ones(32), 2).shape == (16,)

    def test_impulse(self):
        x = np.zeros(64)
        x[0] = 1.0
        np.testing.assert_allclose(avg_downsample(x, 16).data, [1.0 / 16, 0.0, 0.0, 0.0], atol=1e-15)

    def test_right_edge_reads_zeros(self):
        out = avg_downsample(np.ones(20), 4).data
        assert out[-1] == pytest.approx(4.0 / 16)


class TestConv:
    def test_averaging_kernel(self):
        out = conv_downsample(np.full(800, -1.5), 2, np.full(160, 1.0 / 160)).data
        interior = [i for i in range(len(out)) if i * 2 + 160 <= 800]
        np.testing.assert_allclose(out[interior], -1.5, atol=1e-12)

    def test_delta_kernel_is_raw_decimation(self):
        x = generator(0, 'conv').normal(size=333)
        np.testing.assert_array_equal(conv_downsample(x, 2, _delta()).data, decimate(x, 2, anti_alias=False).data)

    def test_macs(self):
        ctx = MacCounter()
        conv_downsample(np.ones(3200), 2, init_conv_kernel(0), ctx)
        assert ctx.total == 256000

    def test_init_near_average(self):
        kernel = init_conv_kernel(3)
        assert kernel.shape == (160,)
        np.testing.assert_allclose(kernel, 1.0 / 160, atol=1e-3)
        np.testing.assert_array_equal(kernel, init_conv_kernel(3))


@pytest.mark.parametrize('k', [2, 3, 4])
def test_length_contract(k):
    rng = generator(k, 'lengths')
    for length in rng.integers(k, 2000, size=25):
        length = int(length)
        x = rng.normal(size=length)
        expected = (length // k,)
        assert decimate(x, k).shape == expected
        assert decimate(x, k, anti_alias=False).shape == expected
        assert avg_downsample(x, k).shape == expected
        assert conv_downsample(x, k, init_conv_kernel(0)).shape == expected


class TestDownsampler:
    @pytest.mark.parametrize('method, anti_alias, per_output', [
        (DownsampleMethod.DECIMATE, True, 63),
        (DownsampleMethod.DECIMATE, False, 0),
        (DownsampleMethod.AVERAGE, True, 16),
        (DownsampleMethod.LEARNED_CONV, True, 160),
    ])
    def test_counted_macs_match(self, method, anti_alias, per_output):
        spec = DownsampleSpec({'method': method, 'factor': 2, 'anti_alias': anti_alias})
        ctx = MacCounter()
        out = Downsampler(spec)(np.ones(3001), ctx)
        assert out.shape == (1500,)
        assert ctx.total == adapter_macs(spec, 3001) == 1500 * per_output
        assert ctx.per_stage.get('adapter', 0) == ctx.total

    def test_learned_kernel_trains(self):
        adapter = Downsampler({'method': DownsampleMethod.LEARNED_CONV, 'factor': 3})
        assert adapter.trainable
        backward(sum_all(adapter(generator(0, 'x').normal(size=900))))
        assert adapter.kernel.grad.shape == (160,)
        assert [name for name, _ in adapter.named_parameters()] == ['kernel']

    def test_fixed_methods_have_no_parameters(self):
        for method in (DownsampleMethod.NONE, DownsampleMethod.DECIMATE, DownsampleMethod.AVERAGE):
            spec = {'method': method, 'factor': 1 if method == DownsampleMethod.NONE else 2}
            adapter = Downsampler(spec)
            assert not adapter.trainable
            assert adapter.parameters() == []

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            DownsampleSpec({'method': DownsampleMethod.AVERAGE, 'factor': 5}).validate()
        with pytest.raises(ConfigError):
            DownsampleSpec({'method': DownsampleMethod.NONE, 'factor': 2}).validate()
        with pytest.raises(ConfigError):
            DownsampleSpec({'method': 'wavelet', 'factor': 2}).validate()

    def test_head_doubling(self):
        assert not DownsampleSpec({'method': DownsampleMethod.AVERAGE, 'factor': 2}).doubles_head()
        assert DownsampleSpec({'method': DownsampleMethod.AVERAGE, 'factor': 3}).doubles_head()
        assert DownsampleSpec({'method': DownsampleMethod.AVERAGE, 'factor': 4}).doubles_head()


class TestFrontend:
    def test_frames_at_320_stride(self):
        frames = frontend(synth('hello'))
        assert frames.shape == (10, 64)

    def test_downsampled_input_halves_frames(self):
        wave = Waveform(generator(0, 'wave').normal(size=6400))
        halved = avg_downsample(wave, 2)
        assert frontend(wave).shape[0] == 20
        assert frontend(halved).shape[0] == 10

    def test_shorter_than_stride(self):
        with pytest.raises(AdapterError):
            frontend(np.ones(319))

    def test_parameters_frozen(self):
        net = Frontend()
        before = net.checksum()
        x = generator(1, 'x').normal(size=3200)
        out = net(x)
        assert not out.requires_grad
        assert all(p.frozen for p in net.parameters())
        assert net.checksum() == before

    def test_macs_per_layer(self):
        params = FrontendParams()
        ctx = MacCounter()
        Frontend(params)(np.ones(3200), ctx)
        # 320 x 10 x 1 x 32 + 40 x 8 x 32 x 32 + 10 x 4 x 32 x 64
        assert ctx.total == params.macs(3200) == 102400 + 327680 + 81920
        assert ctx.per_stage == {'frontend': ctx.total}

    def test_params_validation(self):
        with pytest.raises(ConfigError):
            FrontendParams({'kernels': [10, 8], 'strides': [10, 8, 4]}).validate()
