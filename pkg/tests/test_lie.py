import math

import numpy as np
import pytest
from sympy.polys.domains import QQ

from jetdet.exceptions import DomainError, ExponentialError
from jetdet.jet import Jet, JetMap, parse_jet, random_jet
from jetdet.lie import (
    Derivation,
    FloatJet,
    apply,
    check_exp_criterion,
    check_product_criterion,
    exp,
    exp_as_map,
    exp_growth_bound,
    exp_product,
    inverse_exp_product,
    product_growth_bound,
)
from jetdet.scale import NormEstimate, derivation_norm_bound, majorant_norm

SEEDS = range(20)


def _random_derivation(rng, n_vars, trunc, min_order=2):
    return Derivation(tuple(random_jet(rng, n_vars, trunc, min_order=min_order, density=0.3)
                            for _ in range(n_vars)))


def test_apply():
    v = Derivation((parse_jet("z2", 4, 2), parse_jet("z1", 4, 2)))
    assert apply(v, parse_jet("z1^2 + z2^3", 4)) == parse_jet("2*z1*z2 + 3*z1*z2^2", 4)
    assert apply(Derivation.coordinate(0, 2, 4), parse_jet("z1^3", 4, 2)) == parse_jet("3*z1^2", 4, 2)


def test_exp_closed_form():
    # e^{z²∂} z = z/(1 - z)
    v = Derivation.along(0, parse_jet("z^2", 8))
    expected = parse_jet(" + ".join(f"z^{k}" for k in range(1, 9)), 8)
    assert exp(v, parse_jet("z", 8)) == expected


def test_exp_semisimple():
    v = Derivation.along(0, parse_jet("z", 6))
    result = exp(v, parse_jet("z^2 + 3*z^3", 6))
    assert isinstance(result, FloatJet)
    assert result.coefficient((2,)).real == pytest.approx(math.exp(2), rel=1e-12)
    assert result.coefficient((3,)).real == pytest.approx(3 * math.exp(3), rel=1e-12)


def test_exp_semisimple_closed_forms():
    # e^{-(z/2)∂} z² = e^{-1} z²
    v = Derivation.along(0, parse_jet("(-1/2)*z", 6))
    assert exp(v, parse_jet("z^2", 6)).coefficient((2,)) == pytest.approx(math.exp(-1), rel=1e-12)
    w = Derivation.along(0, parse_jet("(7/10)*z", 6))
    assert exp(w, parse_jet("z", 6)).coefficient((1,)) == pytest.approx(math.exp(0.7), rel=1e-12)
    rotation = Derivation.along(0, parse_jet("i*z", 6))
    assert exp(rotation, parse_jet("z", 6)).coefficient((1,)) == pytest.approx(complex(math.cos(1), math.sin(1)), rel=1e-12)


def test_exp_rejects_low_order():
    with pytest.raises(ExponentialError):
        exp(Derivation((parse_jet("z2", 4, 2), Jet.zero(2, 4))), parse_jet("z1", 4, 2))
    with pytest.raises(ExponentialError):
        exp(Derivation.coordinate(0, 1, 4), parse_jet("z", 4))
    with pytest.raises(ExponentialError):
        exp_as_map(Derivation.along(0, parse_jet("z", 4)))


@pytest.mark.parametrize("seed", SEEDS)
def test_exp_is_composition_with_its_map(seed):
    rng = np.random.default_rng(seed)
    f = random_jet(rng, 2, 6)
    v = _random_derivation(rng, 2, 6)
    assert f.compose(exp_as_map(v)) == exp(v, f)
    assert exp(-v, exp(v, f)) == f


@pytest.mark.parametrize("seed", SEEDS)
def test_exp_product_order_and_inverse(seed):
    rng = np.random.default_rng(seed)
    f = random_jet(rng, 2, 5)
    vs = [_random_derivation(rng, 2, 5) for _ in range(3)]
    P = exp_product(vs)
    assert f.compose(P) == exp(vs[2], exp(vs[1], exp(vs[0], f)))
    assert P.compose(inverse_exp_product(vs)).is_identity()
    assert inverse_exp_product(vs).compose(P).is_identity()


def test_empty_product_is_identity():
    assert exp_product([], 2, 4) == JetMap.identity(2, 4)


def test_product_criterion():
    estimates = [NormEstimate(1, 0.2, 0.01), NormEstimate(1, 0.2, 0.02)]
    verdict = check_product_criterion(estimates, 0.1)
    assert verdict.ok
    assert verdict.total == pytest.approx(0.03)
    assert verdict.margin == pytest.approx(0.1 - 0.09)
    assert not check_product_criterion(estimates, 0.05).ok
    assert check_exp_criterion(estimates[0], 0.1)
    with pytest.raises(DomainError):
        check_product_criterion([NormEstimate(2, 0.2, 0.01)], 0.1)
    with pytest.raises(DomainError):
        check_exp_criterion(estimates[0], 0.3)


def test_exp_growth_bound():
    # 1/(1 - 3C/((1-λ)s)) with C = 0.01, s = 0.2, λ = 0.5
    assert exp_growth_bound(0.01, 0.2, 0.5) == pytest.approx(1 / (1 - 0.3))
    assert exp_growth_bound(0.1, 0.2, 0.5) is None
    assert product_growth_bound([0.005, 0.005], 0.2, 0.5) == pytest.approx(1 / (1 - 0.3))


def test_derivation_records():
    v = Derivation((parse_jet("z1^2", 4, 2), parse_jet("(1/2)*z1*z2", 4, 2)))
    assert Derivation.from_record(v.to_record()) == v
    assert v.omega == 2
    assert (v - v).is_zero()


@pytest.mark.parametrize("seed", SEEDS)
def test_commuting_exponentials(seed):
    rng = np.random.default_rng(seed)
    f = random_jet(rng, 2, 6)
    v = _random_derivation(rng, 2, 6)
    assert exp(v, exp(v.scale(2), f)) == exp(v.scale(3), f)
    a = Derivation.along(0, parse_jet("z1^2", 6, 2).scale(int(rng.integers(1, 4))))
    b = Derivation.along(1, parse_jet("z2^3", 6, 2).scale(int(rng.integers(-3, 0))))
    assert exp(a + b, f) == exp(a, exp(b, f))
    assert exp(a + b, f) == exp(b, exp(a, f))


def _small_derivation(rng):
    return Derivation(tuple(random_jet(rng, 2, 5, min_order=2, density=0.3, max_num=1).scale(QQ(1, 32))
                            for _ in range(2)))


def test_sampled_growth_of_exponentials():
    rng = np.random.default_rng(21)
    claimed = 0
    for _ in range(40):
        f = random_jet(rng, 2, 5, gaussian=True)
        v = _small_derivation(rng)
        vs = [_small_derivation(rng) for _ in range(3)]
        ef = exp(v, f)
        pf = f.compose(exp_product(vs))
        for s in (0.2, 0.3, 0.4):
            for lam in (0.25, 0.5, 0.75):
                factor = exp_growth_bound(derivation_norm_bound(v, s).C, s, lam)
                if factor is not None:
                    claimed += 1
                    assert majorant_norm(ef, lam * s) <= factor * majorant_norm(f, s) * (1 + 1e-12)
                factor = product_growth_bound([derivation_norm_bound(u, s).C for u in vs], s, lam)
                if factor is not None:
                    assert majorant_norm(pf, lam * s) <= factor * majorant_norm(f, s) * (1 + 1e-12)
    assert claimed >= 60
