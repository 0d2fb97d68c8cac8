from asrshrink.adapters.downsample import (  # noqa: F401
    AVERAGE_WINDOW, CONV_KERNEL, FIR_TAPS, AdapterError, DownsampleMethod, DownsampleSpec, Downsampler,
    adapter_macs, anti_alias_filter, avg_downsample, conv_downsample, decimate, init_conv_kernel, output_length,
)
from asrshrink.adapters.frontend import Frontend, FrontendParams, frontend  # noqa: F401
