from __future__ import annotations

from collections.abc import Sequence

from ..errors import ChannelCountMismatch

_CHANNELS = {"SpinPreserving": 2, "General": 4}


def spin_average(rates: Sequence[float], mode: str = "SpinPreserving") -> float:
    """Average over initial spin and sum over final spin.

    SpinPreserving takes the diagonal channels [up, down]; General takes all
    four (s_f, s_i) combinations in any fixed order.
    """
    if mode not in _CHANNELS:
        raise ValueError(f"unknown spin mode {mode!r}")
    if len(rates) != _CHANNELS[mode]:
        raise ChannelCountMismatch(f"{mode} expects {_CHANNELS[mode]} channels, got {len(rates)}")
    return 0.5 * sum(rates)
