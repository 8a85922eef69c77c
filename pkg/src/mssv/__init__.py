"""Monte Carlo pricing of discretely-monitored payoffs under multiscale
stochastic volatility: Black-Scholes paths at the effective volatility plus
closed-form correction weights, a two-factor reference simulator, and
analytic Black-Scholes oracles."""

from .black_scholes import BsInputs, bs_greeks, bs_price
from .config import (
    FullModelParams,
    MarketGroupParams,
    MonitoringGrid,
    PricingConfig,
    load_config,
    uniform_grid,
)
from .full_model import (
    FullModelBatch,
    default_substeps,
    discounted_samples,
    price_full,
    simulate_full,
)
from .paths import MemoryBudgetError, PathBatch, simulate_batch
from .payoffs import PayoffDescriptor, evaluate, evaluate_batch
from .pricing import (
    Estimate,
    convergence,
    estimate_from_samples,
    greek_estimates,
    price_corrected,
    price_zero_order,
    write_convergence_csv,
)
from .weights import (
    BatchWeights,
    aggregate_weight,
    batch_weights,
    vanilla_weights,
)

__version__ = "0.1.0"

__all__ = [
    "BsInputs",
    "bs_greeks",
    "bs_price",
    "FullModelParams",
    "MarketGroupParams",
    "MonitoringGrid",
    "PricingConfig",
    "load_config",
    "uniform_grid",
    "FullModelBatch",
    "default_substeps",
    "discounted_samples",
    "price_full",
    "simulate_full",
    "MemoryBudgetError",
    "PathBatch",
    "simulate_batch",
    "PayoffDescriptor",
    "evaluate",
    "evaluate_batch",
    "Estimate",
    "convergence",
    "estimate_from_samples",
    "greek_estimates",
    "price_corrected",
    "price_zero_order",
    "write_convergence_csv",
    "BatchWeights",
    "aggregate_weight",
    "batch_weights",
    "vanilla_weights",
    "__version__",
]
