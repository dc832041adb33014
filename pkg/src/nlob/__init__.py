"""Order-book price dynamics driven by slowly relaxing trader beliefs.

Submodules: ``model`` (types, rates, norms), ``master`` (Kolmogorov system with
beliefs), ``equilibrium`` (stationary law, theta normalizer, Feller objects),
``hydro`` (disagreement ODE), ``particle`` (N-particle simulation),
``limits`` (diffusive scalings), ``book`` (FIFO order book) and ``cli``.
"""

from . import book, equilibrium, hydro, limits, master, model, particle
from .equilibrium import stationary_pi, theta_normalizer
from .errors import ConfigurationError, DomainError, StepSizeError, WindowError
from .hydro import equilibrium_V
from .master import initial_state, integrate
from .model import (
    AmplitudeLaw,
    LatticeDistribution,
    ModelParams,
    NewsSequence,
    NormSpec,
    SlowState,
    norm_B,
    norm_H_sq,
    sample_news,
    taker_rates,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeLaw",
    "ConfigurationError",
    "DomainError",
    "LatticeDistribution",
    "ModelParams",
    "NewsSequence",
    "NormSpec",
    "SlowState",
    "StepSizeError",
    "WindowError",
    "book",
    "equilibrium",
    "equilibrium_V",
    "hydro",
    "initial_state",
    "integrate",
    "limits",
    "master",
    "model",
    "norm_B",
    "norm_H_sq",
    "particle",
    "sample_news",
    "stationary_pi",
    "taker_rates",
    "theta_normalizer",
]
