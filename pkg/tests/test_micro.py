import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evomarket.errors import IntegrationError, ParameterError
from evomarket.firms import AttachmentConfig
from evomarket.market import MarketParams, MarketState, ProductState, check_firm_identity
from evomarket.micro import (MicroConfig, growth_rate, make_market, mean_fitness,
                             price_fluctuation_step, product_fitness, purchase_rate,
                             replicator_step, run_micro, stationary_consumers, step_consumers,
                             step_inventory)
from evomarket.noise import CORRELATED, WHITE, NoiseSpec
from evomarket import fitting

P = MarketParams(1e6, 0.05, 3e4, 1.0, 0.5, 0.2, 0.01)


def prod(**kw):
    base = dict(id=0, y=1.0, z=0.5, mu=1.0, eta=1.0)
    base.update(kw)
    return ProductState(**base)


# ------------------------------------------------------------------ purchases


def test_purchase_rate_examples():
    assert purchase_rate(prod(z=0.0), 0.2) == 0.0
    assert purchase_rate(prod(), 0.0) == 0.0
    assert purchase_rate(prod(eta=1.0, z=0.5), 0.2) == pytest.approx(0.1)
    assert purchase_rate(prod(z=1.0), 0.2) == pytest.approx(2 * purchase_rate(prod(z=0.5), 0.2))


def test_step_inventory_examples():
    assert step_inventory(prod(gamma=0.0), 0.01) == (0.5, False)
    z, flag = step_inventory(prod(gamma=0.1, y=1.0, z=0.5), 0.01)
    assert z - 0.5 == pytest.approx(0.001) and not flag
    z, flag = step_inventory(prod(gamma=-1.0, y=1.0, z=0.001), 0.01)
    assert z == 0.0 and flag


def test_inventory_aggregation():
    prods = [prod(id=i, y=0.1 * (i + 1), gamma=0.05 * i) for i in range(4)]
    dt = 0.01
    dz = sum(step_inventory(p, dt)[0] - p.z for p in prods)
    y_t = sum(p.y for p in prods)
    gbar = sum(p.gamma * p.y for p in prods) / y_t
    assert dz == pytest.approx(gbar * y_t * dt, rel=1e-12)


# ------------------------------------------------------------------ consumers


def test_consumers_stationary():
    state = make_market(5, P)
    assert step_consumers(state, P, 0.1) == pytest.approx(state.psi, rel=1e-12)
    assert stationary_consumers(state, P) == pytest.approx(state.psi, rel=1e-12)


def test_consumer_deviation_decays_exponentially():
    state = make_market(4, P)
    for p in state.products:
        p.z *= 0.02  # slow relaxation, rate sum(eta z)
    rate = sum(p.eta * p.z for p in state.products)
    psi_star = stationary_consumers(state, P)
    dev0 = 0.3 * psi_star
    state.psi = psi_star + dev0
    dt, tau = 1e-3, 2.0
    for _ in range(int(round(tau / dt))):
        state.psi = step_consumers(state, P, dt)
    got = state.psi - psi_star
    expect = dev0 * math.exp(-rate * tau)
    assert abs(got - expect) / abs(expect) < 1e-4


def test_consumers_without_stock_grow_linearly():
    state = make_market(3, P)
    for p in state.products:
        p.z = 0.0
    psi0 = state.psi
    d = P.repurchase_rate * 1.0
    assert step_consumers(state, P, 0.5) == pytest.approx(psi0 + d * 0.5)


# ------------------------------------------------------------------ fitness


def test_product_fitness_examples():
    assert product_fitness(prod(gamma=0.0), 0.2) == 0.0
    assert product_fitness(prod(eta=1.0, gamma=0.1), 0.2) == pytest.approx(0.02)


def test_mean_fitness_brute_force():
    y = np.array([0.2, 0.3, 0.5])
    f = np.array([0.1, -0.2, 0.05])
    brute = sum(yi * fi for yi, fi in zip(y, f)) / sum(y)
    assert mean_fitness(y, f) == pytest.approx(brute, rel=1e-14)


def test_replicator_examples():
    y = np.array([0.3, 0.7])
    assert np.array_equal(replicator_step(y, np.array([0.4, 0.4]), 1.0), y)
    out = replicator_step(np.array([0.5, 0.5]), np.array([0.1, 0.0]), 1.0)
    assert out == pytest.approx([0.525, 0.475], abs=1e-15)


def test_replicator_logistic():
    gap, dt, tau = 0.1, 1e-3, 60.0
    y = np.array([0.1, 0.9])
    f = np.array([gap, 0.0])
    n = int(round(tau / dt))
    shares = np.empty(n)
    for k in range(n):
        y = replicator_step(y, f, dt)
        shares[k] = y[0] / y.sum()
    t = dt * np.arange(1, n + 1)
    logistic = 1.0 / (1.0 + (0.9 / 0.1) * np.exp(-gap * t))
    assert np.max(np.abs(shares - logistic) / logistic) < 1e-3


@settings(max_examples=200, deadline=None)
@given(y=st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=50),
       seed=st.integers(0, 2**32 - 1))
def test_replicator_conserves_total(y, seed):
    y = np.array(y)
    f = np.random.default_rng(seed).normal(0.0, 1.0, y.size)
    dt = 0.1 / max(np.max(np.abs(f - mean_fitness(y, f))), 1e-12)
    out = replicator_step(y, f, dt)
    assert abs(out.sum() - y.sum()) / y.sum() < 1e-10


# ------------------------------------------------------------------ growth


def test_growth_rate_examples():
    assert growth_rate(1.0, 1.0) == 0.0
    assert growth_rate(1.0, 2.0) == pytest.approx(math.log(2))
    assert math.isnan(growth_rate(0.0, 1.0))
    r = growth_rate([1.0, 2.0, 0.0], [1.0, 4.0, 3.0])
    assert r[0] == 0.0 and r[1] == pytest.approx(math.log(2)) and math.isnan(r[2])


def test_short_scale_mean_growth_is_zero():
    state = make_market(10_000, P)
    fnoise = NoiseSpec(WHITE, 5e-4, seed=3)
    rec = run_micro(state, P, MicroConfig(dt=0.1, fitness_noise=fnoise), 1)
    r = growth_rate(rec.snapshots[0].y, rec.snapshots[-1].y)
    assert abs(r.mean()) < 3 * r.std() / math.sqrt(r.size)


# ------------------------------------------------------------------ prices


def test_price_step_examples():
    assert price_fluctuation_step(0.3, 0.0, 0.1, 0.1) < 0.3
    assert price_fluctuation_step(0.0, 0.0, 0.1, 0.1) == 0.0
    assert price_fluctuation_step(-0.3, 0.0, 0.1, 0.1) == pytest.approx(-0.29)


def test_white_price_noise_is_laplace():
    rng = np.random.default_rng(5)
    D, phi, dt = 0.01, 0.05, 0.02
    sd = math.sqrt(2 * D * dt)
    dmu = np.zeros(1000)
    samples = []
    for k in range(12_000):
        dmu = price_fluctuation_step(dmu, rng.standard_normal(dmu.size) * sd, phi, dt)
        if k >= 2000 and k % 100 == 0:
            samples.append(dmu.copy())
    x = np.concatenate(samples)
    assert x.size == 100_000
    lap = fitting.fit_laplace(x, n_boot=0)
    gau = fitting.fit_gaussian(x)
    assert lap.loglik > gau.loglik
    # stationary Laplace scale D/phi
    assert lap.params["scale"] == pytest.approx(D / phi, rel=0.1)


# ------------------------------------------------------------------ engine


def test_zero_steps_records_initial_snapshot_only():
    state = make_market(5, P)
    rec = run_micro(state, P, MicroConfig(), 0)
    assert len(rec.snapshots) == 1
    assert rec.snapshots[0].tau == 0.0


def test_noise_free_equal_fitness_is_fixed_point():
    state = make_market(8, P, sizes=np.arange(1, 9), gamma=0.0)
    before = [(p.y, p.z, p.mu) for p in state.products]
    psi0 = state.psi
    run_micro(state, P, MicroConfig(dt=0.5), 200)
    after = [(p.y, p.z, p.mu) for p in state.products]
    assert np.allclose(before, after, rtol=1e-12, atol=0)
    assert state.psi == pytest.approx(psi0, rel=1e-12)


def _noisy_cfg(seed):
    return MicroConfig(dt=0.1, price_noise=NoiseSpec(WHITE, 0.01, seed=seed),
                       fitness_noise=NoiseSpec(WHITE, 5e-4, seed=seed + 1),
                       restoring_strength=0.05, record_every=10)


def test_run_is_deterministic():
    recs = []
    for _ in range(2):
        state = make_market(50, P, n_firms=5)
        recs.append(run_micro(state, P, _noisy_cfg(4), 300, seed=9))
    for a, b in zip(recs[0].snapshots, recs[1].snapshots):
        for name in ("y", "z", "mu", "f", "firm_x"):
            assert np.array_equal(getattr(a, name), getattr(b, name))


def test_snapshot_times_increase():
    state = make_market(10, P)
    rec = run_micro(state, P, _noisy_cfg(1), 95)
    t = rec.times()
    assert np.all(np.diff(t) > 0)
    assert t[-1] == pytest.approx(9.5)


def test_nan_aborts_with_product_and_step():
    state = make_market(6, P)
    state.products[3].z = float("nan")
    with pytest.raises(IntegrationError, match=r"product 3 at step 0|consumer density"):
        run_micro(state, P, MicroConfig(), 5)


def test_step_size_guard():
    state = make_market(20, P)
    cfg = MicroConfig(dt=1.0, fitness_noise=NoiseSpec(WHITE, 1.0, seed=0))
    with pytest.raises(IntegrationError, match="step size"):
        run_micro(state, P, cfg, 10)


def test_exit_below_floor():
    state = make_market(3, P, sizes=[1.0, 1.0, 1e-12])
    rec = run_micro(state, P, MicroConfig(y_floor=1e-9), 2)
    assert rec.final.n_products == 2
    assert [p.id for p in state.products] == [0, 1]


def test_attachment_keeps_firm_identity():
    state = make_market(20, P, n_firms=4, firm_A=0.05)
    cfg = AttachmentConfig(A=0.05, new_product_size_frac=0.1)
    rec = run_micro(state, P, _noisy_cfg(2), 400, attachment=cfg, seed=3)
    assert len(state.products) > 20
    check_firm_identity(state)
    snap = rec.final
    for k, fid in enumerate(snap.firm_ids):
        owned = [p.id for p in state.products if p.id in state.firms[k].product_ids]
        ys = [p.y for p in state.products if p.id in owned]
        assert snap.firm_x[k] == pytest.approx(sum(ys), rel=1e-12)


def test_config_validation():
    with pytest.raises(ParameterError):
        MicroConfig(dt=0.0)
    with pytest.raises(ParameterError):
        MicroConfig(coupling="correlated", price_noise=NoiseSpec(WHITE, 1.0))
    MicroConfig(coupling="correlated", price_noise=NoiseSpec(CORRELATED, 1.0, 0.4))


def test_mean_reversion():
    state = make_market(100, P)
    cfg = MicroConfig(dt=0.02, price_noise=NoiseSpec(WHITE, 0.01, seed=8),
                      restoring_strength=0.05, record_every=50)
    rec = run_micro(state, P, cfg, 20_000)
    dev = np.array([s.mu - 1.0 for s in rec.snapshots[40:]])
    per_product = dev.mean(axis=0)
    assert abs(per_product.mean()) < 4 * per_product.std() / math.sqrt(per_product.size)
