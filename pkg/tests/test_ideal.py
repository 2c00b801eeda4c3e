import numpy as np
import pytest
from sympy.polys.domains import QQ_I
from sympy.polys.matrices import DomainMatrix

from jetdet.corpus import a_series, cubic_series, morse_series
from jetdet.exceptions import DegenerateInputError
from jetdet.ideal import (
    IdealData,
    RightInverse,
    derivations_preserving,
    determinacy_exponent,
    if_module_image,
    ideal_power,
    jacobian_ideal,
    maximal_ideal,
    membership_certificate,
    milnor_number,
    nu_exponent,
    parse_ideal,
    right_inverse,
    unit_ideal,
)
from jetdet.jet import Jet, coeff_from_pair, monomials_of_degree, monomials_upto, parse_jet, random_jet
from jetdet.lie import Derivation, apply


def test_maximal_ideal_membership():
    M = maximal_ideal(2, 4)
    assert M.contains(parse_jet("z1*z2 + z2^3", 4))
    assert not M.contains(parse_jet("1 + z1", 4, 2))
    M2 = ideal_power(M, 2)
    assert M2.contains(parse_jet("z1*z2", 4))
    assert not M2.contains(parse_jet("z1", 4, 2))
    assert M.certified_power() == 1
    assert unit_ideal(2, 4).certified_power() == 0


def test_membership_certificate_reconstructs():
    I = parse_ideal(["z1^2 + z2^3", "z1*z2"], 2, 6)
    h = parse_jet("(z1 + z2)*(z1^2 + z2^3) + z2^2*z1*z2", 6)
    records = membership_certificate(I, h)
    assert records is not None
    total = Jet.zero(2, 6)
    for r in records:
        total = total + Jet.monomial(tuple(r.monomial), coeff_from_pair(r.coeff), 6) * I.generators[r.generator]
    assert total == h
    assert membership_certificate(I, parse_jet("z2", 6, 2)) is None


@pytest.mark.parametrize("germ", a_series(4), ids=lambda g: g.name)
def test_a_series_invariants(germ):
    f = germ.jet()
    k = int(germ.name[1:])
    assert milnor_number(f).value == k
    assert determinacy_exponent(f).value == k


@pytest.mark.parametrize("germ", cubic_series(3), ids=lambda g: g.name)
def test_cubic_series_invariants(germ):
    f = germ.jet()
    k = germ.trunc - 5
    assert milnor_number(f).value == 2 * k
    assert determinacy_exponent(f).value == k + 1


@pytest.mark.parametrize("germ", morse_series(3), ids=lambda g: g.name)
def test_morse_invariants(germ):
    f = germ.jet()
    assert milnor_number(f).value == 1
    assert determinacy_exponent(f).value == 1


def test_non_isolated_is_inconclusive():
    f = parse_jet("z1^2", 6, 2)
    mu = milnor_number(f)
    assert mu.value is None
    assert not mu.conclusive
    assert "raise trunc" in mu.reason


def test_constant_germ_is_degenerate():
    with pytest.raises(DegenerateInputError):
        jacobian_ideal(parse_jet("3", 4, 2))


def test_derivations_preserving_maximal_ideal():
    M = maximal_ideal(2, 5)
    assert derivations_preserving(M, 0) == []
    assert len(derivations_preserving(M, 1)) == 4


def test_module_image_of_unit_ideal():
    f = parse_jet("z^2", 8)
    image = if_module_image(f, unit_ideal(1, 8))
    assert image.certified_power() == 3
    nu = nu_exponent(f, unit_ideal(1, 8))
    assert not nu.conclusive


def test_nu_for_maximal_ideal_and_morse(morse2):
    image = if_module_image(morse2, maximal_ideal(2, 6))
    assert image.certified_power() == 4
    assert nu_exponent(morse2, maximal_ideal(2, 6)).value == 4


def test_nu_rejects_zero_ideal(morse2):
    with pytest.raises(DegenerateInputError):
        nu_exponent(morse2, IdealData([], 2, 6))


def test_right_inverse_closed_forms(morse2):
    solution = right_inverse(morse2, parse_jet("z1^4", 6, 2))
    assert solution.success
    assert solution.u == Derivation((parse_jet("(1/2)*z1^3", 6, 2), Jet.zero(2, 6)))

    f = parse_jet("z^2", 6)
    solution = RightInverse(f).solve(parse_jet("z^3", 6))
    assert solution.u == Derivation.along(0, parse_jet("(1/2)*z^2", 6))
    assert apply(solution.u, f) == parse_jet("z^3", 6)


def test_right_inverse_is_permutation_equivariant(morse2):
    j = RightInverse(morse2)
    u1 = j.solve(parse_jet("z1^3*z2 + 2*z2^4", 6)).u
    u2 = j.solve(parse_jet("z2^3*z1 + 2*z1^4", 6)).u
    swapped = Derivation((u1.components[1].compose([parse_jet("z2", 6, 2), parse_jet("z1", 6, 2)]),
                          u1.components[0].compose([parse_jet("z2", 6, 2), parse_jet("z1", 6, 2)])))
    assert u2 == swapped


def test_right_inverse_reports_failure_degree():
    f = parse_jet("z1^2", 6, 2)
    j = RightInverse(f)
    b = parse_jet("z1^3 + z2^4", 6)
    assert not j.in_image(b)
    assert j.first_failing_degree(b) == 4
    solution = j.solve(b)
    assert not solution.success
    assert solution.failure_degree == 4
    assert apply(solution.u, f) == parse_jet("z1^3", 6, 2)


def test_inverse_norm_bound_is_positive():
    f = parse_jet("z^2", 5)
    estimate = RightInverse(f).inverse_norm_bound(1, 0.4, (0.1, 0.2, 0.3))
    assert estimate.k == 1
    assert estimate.C > 0


@pytest.mark.parametrize("k", range(1, 11))
def test_milnor_number_of_a_k(k):
    f = parse_jet(f"z^{k + 1}", k + 5)
    assert milnor_number(f).value == k
    assert determinacy_exponent(f).value == k


def test_morse_in_four_variables():
    f = parse_jet("z1^2 + z2^2 + z3^2 + z4^2", 5)
    assert milnor_number(f).value == 1
    assert determinacy_exponent(f).value == 1


def _local_algebra_dimension(f, degree):
    """dim O/(Jf + M^{degree+1}) from the rank of the full matrix of z^m·∂_i f."""
    columns = {alpha: k for k, alpha in enumerate(monomials_upto(f.n_vars, degree))}
    rows = []
    for i in range(f.n_vars):
        df = f.partial(i)
        for m in monomials_upto(f.n_vars, degree):
            row = [QQ_I(0, 0)] * len(columns)
            for alpha, c in df.coeffs.items():
                beta = tuple(a + b for a, b in zip(alpha, m))
                if sum(beta) <= degree:
                    row[columns[beta]] = c
            rows.append(row)
    rank = DomainMatrix(rows, (len(rows), len(columns)), QQ_I).rank()
    return len(columns) - rank


@pytest.mark.parametrize("germ", a_series(6) + cubic_series(3) + morse_series(2), ids=lambda g: g.name)
def test_milnor_number_against_full_rank_count(germ):
    f = germ.jet()
    high = parse_jet(germ.expression, germ.trunc + 3, germ.n_vars)
    assert milnor_number(f).value == _local_algebra_dimension(high, germ.trunc + 2)


@pytest.mark.parametrize("germ", a_series(4) + cubic_series(3) + morse_series(3), ids=lambda g: g.name)
def test_perturbations_of_high_order_lie_in_m2_jf(germ):
    f = germ.jet()
    n, trunc = f.n_vars, f.trunc
    mu = milnor_number(f).value
    m2_jf = IdealData([Jet.monomial(m, 1, trunc) * f.partial(i)
                       for m in monomials_of_degree(n, 2) for i in range(n)], n, trunc)
    for d in range(mu + 2, trunc + 1):
        for alpha in monomials_of_degree(n, d):
            assert m2_jf.contains(Jet.monomial(alpha, 1, trunc), trunc)


@pytest.mark.parametrize("seed", range(10))
def test_right_inverse_is_linear(morse2, seed):
    rng = np.random.default_rng(seed)
    j = RightInverse(morse2)
    b1 = random_jet(rng, 2, 6, min_order=3, gaussian=True)
    b2 = random_jet(rng, 2, 6, min_order=3, gaussian=True)
    u1, u2 = j.solve(b1).u, j.solve(b2).u
    assert j.solve(b1 + b2).u == u1 + u2
    assert j.solve(b1.scale("3/7")).u == u1.scale("3/7")
    assert apply(u1, morse2) == b1
