"""Built-in scenarios."""

from __future__ import annotations

from .scenario import Scenario, loads

_MARKET = """
[market]
market_potential = 1.0e6
upper_share = 0.05
mean_income = 3.0e4
natural_price = 1.0
demand_width = 0.5
repurchase_rate = 0.2
epsilon = 0.01
"""

PRESETS: dict[str, str] = {
    "gibrat-lognormal": """
name = "gibrat-lognormal"
seeds = [1]
horizon = 10000
outputs = ["gibrat"]
""" + _MARKET + """
[micro]
dt = 0.1
record_every = 100

[micro.fitness_noise]
kind = "white"
amplitude = 0.0005

[initial]
n_products = 10000
""",
    "pareto-tail": """
name = "pareto-tail"
seeds = [1]
horizon = 0
outputs = ["pareto_tail"]
""" + _MARKET + """
[attachment]
A = 1.0
D = 1.0
mode = "sde_reduced"
scheme = "potential"
x_floor = 1.0e-3
boundary = "reflect"

[analysis.pareto_tail]
ratios = [0.5, 1.0, 2.0]
n_firms = 10000
dt = 0.05
checkpoint_every = 1.0
ks_tol = 0.01
tail_frac = 0.05
""",
    "laplace-price": """
name = "laplace-price"
seeds = [1]
horizon = 55000
outputs = ["laplace_price"]
""" + _MARKET + """
[micro]
dt = 0.02
restoring_strength = 0.05
record_every = 50

[micro.price_noise]
kind = "white"
amplitude = 0.01

[initial]
n_products = 100

[analysis.laplace_price]
burn_in = 5000
""",
    "size-variance": """
name = "size-variance"
seeds = [1]
horizon = 5000
outputs = ["size_variance"]
""" + _MARKET + """
[micro]
dt = 0.1
restoring_strength = 0.05
record_every = 10

[micro.price_noise]
kind = "white"
amplitude = 0.01

[initial]
n_products = 1000
size_dist = "geometric"
size_span = 64.0

[analysis.size_variance]
direct_betas = [0.2, 0.17, 0.15]
corr_exponents = [0.2, 0.4, 0.6]
n_bins = 10
burn_in_frac = 0.2
min_events = 4
n_steps_correlated = 1500
""",
    "growth-mixture": """
name = "growth-mixture"
seeds = [1]
horizon = 0
outputs = ["growth_mixture"]
""" + _MARKET + """
[analysis.growth_mixture]
n_samples = 100000
sigma_m = 0.81
beta = 0.2
size_span = 1.0e9
r_min = "smallest_scale"
""",
    "mean-price": """
name = "mean-price"
seeds = [1]
horizon = 200
outputs = ["mean_price"]
""" + _MARKET + """
[micro]
dt = 0.1
restoring_strength = 0.05
record_every = 10

[micro.price_noise]
kind = "white"
amplitude = 0.01

[initial]
n_products = 200

[analysis.mean_price]
n_macro = 60
macro_horizon = 30.0
excess_supply = 1.0
initial_offset = 0.6
""",
    "lifecycle-bwtv": """
name = "lifecycle-bwtv"
seeds = [1]
horizon = 0
outputs = ["lifecycle"]

[market]
market_potential = 2.0e4
upper_share = 0.0
mean_income = 3.0e3
natural_price = 0.286
demand_width = 0.5
repurchase_rate = 0.01
epsilon = 0.01
alpha_mean = 0.8

[lifecycle]
a = 0.25
mu_0 = 1.0
kappa = 5.0
chi = 0.8
t_p = 12.0
q_m = 0.01
max_echo_depth = 3
horizon = 60.0
grid = 0.05

[market_size]
B = 1.8e-5
N_f0 = 0.0
switch_threshold = 0.1
""",
    "profit-invariant": """
name = "profit-invariant"
seeds = [1]
horizon = 2000
outputs = ["profit_invariant"]
""" + _MARKET + """
[micro]
dt = 0.1
restoring_strength = 0.05
record_every = 20

[micro.price_noise]
kind = "white"
amplitude = 0.01

[micro.fitness_noise]
kind = "white"
amplitude = 0.0005

[initial]
n_products = 200

[analysis.profit_invariant]
alpha = 0.8
alpha_spread = 0.01
""",
}


def preset_text(name: str) -> str:
    try:
        return PRESETS[name].lstrip()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


def preset_scenarios() -> dict[str, Scenario]:
    """All built-in scenarios, validated."""
    return {name: loads(text) for name, text in PRESETS.items()}


def load_preset(name: str) -> Scenario:
    return loads(preset_text(name))
