import math

import numpy as np
import pytest

from evomarket import fitting
from evomarket.errors import ConsistencyError, DomainError, ParameterError
from evomarket.firms import (AttachmentConfig, aggregate_firm_sales, attachment_step,
                             run_sde_ensemble, sde_reduced_step, select_cash_cow,
                             stationary_tail_exponent)
from evomarket.market import FirmState, ProductState


def products(ys):
    return {i: ProductState(i, y=y, z=1.0, mu=1.0, eta=1.0) for i, y in enumerate(ys)}


def test_aggregate_examples():
    assert aggregate_firm_sales(FirmState(0, [0]), products([0.3])) == 0.3
    assert aggregate_firm_sales(FirmState(0, [0, 1, 2]), products([0.1, 0.2, 0.3])) == \
        pytest.approx(0.6, abs=1e-15)
    empty = FirmState(0, [])
    assert aggregate_firm_sales(empty, {}) == 0.0
    assert not empty.active
    with pytest.raises(ConsistencyError):
        aggregate_firm_sales(FirmState(0, [4]), products([0.1]))


def test_cash_cow():
    prods = products([0.1, 0.5, 0.2])
    firm = FirmState(0, [0, 1, 2])
    assert select_cash_cow(firm, prods) == 1
    assert select_cash_cow(FirmState(0, [2, 0, 1]), products([0.3, 0.3, 0.3])) == 0
    prods[2].y = 0.9
    assert select_cash_cow(firm, prods) == 2
    with pytest.raises(DomainError):
        select_cash_cow(FirmState(0, []), prods)


def test_attachment_off_cases(rng):
    prods = products([0.4, 0.2])
    firm = FirmState(0, [0, 1])
    cfg0 = AttachmentConfig(A=0.0)
    assert all(attachment_step(firm, prods, cfg0, 1.0, rng, 99) is None for _ in range(1000))
    zero = products([0.0])
    cfg = AttachmentConfig(A=1.0)
    assert all(attachment_step(FirmState(0, [0]), zero, cfg, 1.0, rng, 99) is None
               for _ in range(1000))


def test_attachment_count_matches_poisson_thinning(rng):
    prods = products([0.3, 0.2])
    firm = FirmState(0, [0, 1])
    x = 0.5
    cfg = AttachmentConfig(A=0.02, new_product_size_frac=0.1)
    dt, n_steps, trials = 0.5, 200, 400
    counts = np.array([sum(attachment_step(firm, prods, cfg, dt, rng, 99) is not None
                           for _ in range(n_steps)) for _ in range(trials)])
    expect = cfg.A * x * dt * n_steps / cfg.new_product_size_frac
    assert abs(counts.mean() - expect) < 3 * counts.std(ddof=1) / math.sqrt(trials)


def test_attachment_adds_new_demand(rng):
    prods = products([0.3, 0.2])
    firm = FirmState(0, [0, 1])
    cfg = AttachmentConfig(A=10.0, new_product_size_frac=0.1)
    new = attachment_step(firm, prods, cfg, 1.0, rng, 7)
    assert new is not None and new.id == 7
    assert new.y == pytest.approx(0.05)
    prods[7] = new
    firm.product_ids.append(7)
    assert aggregate_firm_sales(firm, prods) > 0.5


def test_sde_trivial_cases():
    cfg = AttachmentConfig(A=0.0, D=0.0, mode="sde_reduced")
    x = np.array([0.5, 2.0])
    assert np.array_equal(sde_reduced_step(x, cfg, 0.1, np.zeros(2)), x)
    with pytest.raises(DomainError):
        sde_reduced_step(np.array([0.0]), cfg, 0.1, np.zeros(1))


def test_euler_log_walk_has_ito_drift():
    D, dt, T, n = 0.05, 0.01, 10.0, 20_000
    cfg = AttachmentConfig(A=0.0, D=D, mode="sde_reduced", scheme="euler")
    rng = np.random.default_rng(1)
    x = np.ones(n)
    for _ in range(int(round(T / dt))):
        x = sde_reduced_step(x, cfg, dt, rng.standard_normal(n) * math.sqrt(2 * D * dt))
    lr = np.log(x)
    assert abs(lr.mean() - (-D * T)) < 3 * lr.std() / math.sqrt(n)


def test_stationary_tail_exponent():
    assert stationary_tail_exponent(0.0, 1.0) == 1.0
    assert stationary_tail_exponent(1.0, 1.0) == 2.0
    assert stationary_tail_exponent(0.5, 1.0) == 1.5
    with pytest.raises(DomainError):
        stationary_tail_exponent(1.0, 0.0)


def test_reduced_ensemble_zipf():
    cfg = AttachmentConfig(A=1.0, D=1.0, mode="sde_reduced", x_floor=1e-3, boundary="reflect")
    res = run_sde_ensemble(10_000, cfg, 0.05, seed=4, checkpoint_every=1.0, max_time=500.0,
                           min_time=math.log(1e3) + 20.0)
    assert res.converged
    fit = fitting.fit_pareto_tail(res.sizes)
    assert abs(fit.params["pdf_exponent"] - 2.0) < 0.15


def test_reinject_boundary_stays_positive():
    cfg = AttachmentConfig(A=1.0, D=1.0, mode="sde_reduced", x_floor=1e-3)
    res = run_sde_ensemble(2000, cfg, 0.05, seed=1, checkpoint_every=1.0, max_time=20.0)
    assert np.all(res.sizes >= cfg.x_floor)
    assert res.reinjections > 0


def test_config_validation():
    with pytest.raises(ParameterError):
        AttachmentConfig(A=-1.0)
    with pytest.raises(ParameterError):
        AttachmentConfig(new_product_size_frac=1.0)
    with pytest.raises(ParameterError):
        AttachmentConfig(boundary="absorb")
