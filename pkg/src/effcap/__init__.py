"""Effective capacity of Markov-modulated channels: exact Gartner-Ellis limit,
the CLT approximation, and Monte Carlo oracles for both."""
from .errors import (DegenerateEstimate, EffcapError, InsufficientTail, InvalidMatrix,
                     InvalidParameter, NonConvergent, Unstable)
from .markov import (IidSource, MarkovChannel, QosExponent, channel_effective_capacity,
                     effective_capacity, gaussian_iid_ge_limit, ge_limit_iid, ge_limit_mmp,
                     spectral_radius)
from .montecarlo import (QueueTailEstimate, SamplePathEstimate, SimConfig, empirical_moments,
                         estimate_ge_limit, generate_path, simulate_queue)
from .onoff import (BlockSpec, OnOffChannel, OnOffMoments, approx_effective_capacity,
                    approx_ge_limit, autocovariance, block_variance, block_variance_rate,
                    exact_effective_capacity, exact_ge_limit, stationary_on_probability)
from .report import (ComparisonRow, SweepSpec, emit_csv, parse_csv, run_rate_sweep,
                     run_theta_sweep, run_validation)

__version__ = "0.1.0"
