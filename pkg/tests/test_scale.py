import math

import numpy as np
import pytest

from jetdet.exceptions import DomainError
from jetdet.jet import parse_jet, random_jet
from jetdet.lie import Derivation, apply
from jetdet.scale import (
    NormEstimate,
    ScaleParams,
    derivation_norm_bound,
    filtration_ratio,
    l2_norm,
    majorant_norm,
    norm_report,
    power_norm_bound,
    product_norm_bound,
    round_up,
    stirling_bound_holds,
    sup_bound_from_l2,
    sup_norm_sample,
)

SEEDS = range(20)


def test_majorant_norm_value():
    f = parse_jet("z1^2 - 2*z2 + i*z1*z2", 4)
    expected = 0.25 + 2 * 0.5 + 0.25
    assert majorant_norm(f, 0.5) >= expected
    assert majorant_norm(f, 0.5) == pytest.approx(expected, rel=1e-12)
    assert majorant_norm(parse_jet("0", 4, 2), 0.5) == 0.0


def test_l2_norm_of_constant():
    # ‖1‖² = π s² on the disc of radius s
    assert l2_norm(parse_jet("1", 3), 0.3) == pytest.approx(0.3 * math.sqrt(math.pi), rel=1e-12)


def test_round_up_is_an_upper_bound():
    for value in (0.1, 1.0 / 3.0, 123.456):
        assert round_up(value) > value
    assert round_up(0.0) == 0.0


GRID_PAIRS = [(s, sigma) for s in (0.05, 0.1, 0.15, 0.2, 0.25) for sigma in (0.05, 0.15)]


def test_submultiplicative_and_cauchy():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n_vars = int(rng.integers(1, 3))
        f = random_jet(rng, n_vars, 5, gaussian=True, density=0.4)
        g = random_jet(rng, n_vars, 5, gaussian=True, density=0.4)
        fg = f * g
        partials = [f.partial(i) for i in range(n_vars)]
        for s, sigma in GRID_PAIRS:
            assert majorant_norm(fg, s) <= majorant_norm(f, s) * majorant_norm(g, s) * (1 + 1e-12)
            for df in partials:
                assert majorant_norm(df, s) <= majorant_norm(f, s + sigma) / sigma * (1 + 1e-12)


def test_product_of_derivations_bound():
    rng = np.random.default_rng(12)
    tau = 0.45
    for _ in range(200):
        f = random_jet(rng, 2, 5, density=0.4)
        v1, v2 = (Derivation(tuple(random_jet(rng, 2, 5, min_order=2, density=0.3) for _ in range(2)))
                  for _ in range(2))
        bound = product_norm_bound([derivation_norm_bound(v1, tau), derivation_norm_bound(v2, tau)])
        assert bound.k == 2
        v1v2f = apply(v1, apply(v2, f))
        for s, sigma in GRID_PAIRS:
            assert majorant_norm(v1v2f, s) <= bound.C / sigma ** 2 * majorant_norm(f, s + sigma) * (1 + 1e-12)


def test_norms_are_plain_floats():
    f = parse_jet("(1/3)*z1^2 - (10^30/7)*i*z2", 4)
    assert type(majorant_norm(f, 0.5)) is float
    assert type(l2_norm(f, 0.5)) is float
    v = Derivation((parse_jet("(1/3)*z1^2", 4, 2), parse_jet("z1*z2", 4, 2)))
    assert type(derivation_norm_bound(v, 0.5).C) is float
    assert majorant_norm(parse_jet("1/3", 2), 0.5) == pytest.approx(1 / 3, rel=1e-12)


@pytest.mark.parametrize("seed", SEEDS)
def test_derivation_bound_is_one_bounded(seed):
    rng = np.random.default_rng(seed)
    f = random_jet(rng, 2, 6)
    v = Derivation(tuple(random_jet(rng, 2, 6, min_order=2) for _ in range(2)))
    tau = 0.4
    C = derivation_norm_bound(v, tau).C
    for s, sigma in ((0.1, 0.3), (0.2, 0.2), (0.3, 0.05)):
        assert majorant_norm(apply(v, f), s) <= C / sigma * majorant_norm(f, s + sigma) * (1 + 1e-12)


@pytest.mark.parametrize("seed", SEEDS)
def test_sup_bounds(seed):
    rng = np.random.default_rng(seed)
    f = random_jet(rng, 2, 5, gaussian=True)
    s = 0.3
    sampled = sup_norm_sample(f, s, rng, samples=32)
    assert sampled <= majorant_norm(f, s) * (1 + 1e-12)
    assert sampled <= sup_bound_from_l2(f, s, 0.1) * (1 + 1e-12)


@pytest.mark.parametrize("seed", SEEDS)
def test_filtration_ratio(seed):
    rng = np.random.default_rng(seed)
    f = random_jet(rng, 2, 6, min_order=2)
    for s in (0.05, 0.1, 0.2):
        assert filtration_ratio(f, s, 0.2) <= 1 + 1e-12


def test_operator_bounds():
    a, b = NormEstimate(1, 0.4, 0.5), NormEstimate(2, 0.4, 0.25)
    prod = product_norm_bound([a, b])
    assert prod.k == 3
    assert prod.C == pytest.approx(2 ** 3 * 0.5 * 0.25)
    power = power_norm_bound(a, 3)
    assert power.k == 3
    assert power.C == pytest.approx(1.5 ** 3)
    with pytest.raises(DomainError):
        power_norm_bound(b, 2)
    with pytest.raises(DomainError):
        product_norm_bound([a, NormEstimate(1, 0.3, 0.1)])


def test_stirling_bound():
    assert all(stirling_bound_holds(n) for n in range(65))


def test_scale_params():
    params = ScaleParams.geometric(0.45, 10)
    assert len(params.grid) == 10
    assert all(0 < a < b < 0.45 for a, b in zip(params.grid, params.grid[1:]))
    assert all(sigma > 0 for _, sigma in params.pairs())
    with pytest.raises(DomainError):
        ScaleParams(1.0, (0.5, 0.2))
    with pytest.raises(DomainError):
        ScaleParams(1.0, (0.5, 1.0))
    with pytest.raises(DomainError):
        NormEstimate(1, 0.0, 1.0)


def test_norm_report():
    report = norm_report(parse_jet("z^2", 4), 0.5)
    assert report.norm_kind == "majorant"
    assert report.value == pytest.approx(0.25)
    with pytest.raises(DomainError):
        norm_report(parse_jet("z^2", 4), 0.5, kind="sup")
    with pytest.raises(DomainError):
        majorant_norm(parse_jet("z", 4), -1.0)
