"""User scheduling laboratory for the three-cluster MIMO Y relay channel.

Modules
-------
mathkit     small dense linear algebra helpers
channel     configuration, reference signal space, fading draws
minua       Min-UA transmission chain (signal space alignment, ZF relay)
erua        ER-UA transmission chain (RSS-guided beamforming, fixed-gain relay)
scheduling  centralized and distributed scheduling criteria
protocol    timer and feedback protocol simulation with overhead counters
analysis    closed-form outage bounds and high-SNR approximations
harness     Monte Carlo outage estimation
cli         command-line entry point
"""

from .channel import Mode, NetworkConfig, RssMode, make_rss, parse_config, sample_channels
from .errors import (
    ConfigError,
    DegenerateChannelError,
    DomainError,
    IllConditionedAlignmentError,
    NumericInstabilityError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateChannelError",
    "DomainError",
    "IllConditionedAlignmentError",
    "Mode",
    "NetworkConfig",
    "NumericInstabilityError",
    "RssMode",
    "make_rss",
    "parse_config",
    "sample_channels",
]
