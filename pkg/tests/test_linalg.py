from sympy.polys.domains import QQ_I

from jetdet.linalg import LinearSystem, SpanBasis


def q(a, b=0):
    return QQ_I(a, b)


def test_span_membership_and_expression():
    basis = SpanBasis()
    assert basis.add({0: q(1), 1: q(2)}, "a") is None
    assert basis.add({1: q(1), 2: q(1)}, "b") is None
    target = {0: q(2), 1: q(7), 2: q(3)}  # 2a + 3b
    assert basis.contains(target)
    assert basis.express(target) == {"a": q(2), "b": q(3)}
    assert not basis.contains({2: q(1)})
    assert basis.rank() == 2


def test_dependency_goes_to_kernel():
    basis = SpanBasis()
    basis.add({0: q(1)}, "x")
    basis.add({1: q(0, 1)}, "y")
    dep = basis.add({0: q(2), 1: q(0, 3)}, "z")
    assert dep == {"z": q(1), "x": q(-2), "y": q(-3)}
    assert basis.kernel == [dep]


def test_limit_works_in_the_quotient():
    basis = SpanBasis()
    basis.add({0: q(1), 3: q(5)}, 0)
    assert basis.contains({0: q(4)}, limit=3)
    assert not basis.contains({0: q(4)})
    assert basis.rank(limit=1) == 1


def test_linear_system_solve():
    # y0 + y1 = 3, y1 - y2 = 1, y0 + 2*y1 - y2 = 4 (third row = first + second)
    rows = [{0: q(1), 1: q(1)}, {1: q(1), 2: q(-1)}, {0: q(1), 1: q(2), 2: q(-1)}]
    system = LinearSystem(rows)
    assert system.rank == 2
    rhs = {0: q(3), 1: q(1), 2: q(4)}
    y = system.solve(rhs)
    assert y is not None
    for r, row in enumerate(rows):
        total = sum((c * y.get(j, QQ_I.zero) for j, c in row.items()), QQ_I.zero)
        assert total == rhs.get(r, QQ_I.zero)


def test_linear_system_inconsistent():
    rows = [{0: q(1)}, {0: q(2)}]
    system = LinearSystem(rows)
    assert not system.is_consistent({0: q(1), 1: q(1)})
    assert system.solve({0: q(1), 1: q(1)}) is None
    assert system.solve({0: q(1), 1: q(2)}) == {0: q(1)}


def test_gaussian_coefficients():
    system = LinearSystem([{0: q(0, 2)}])
    assert system.solve({0: q(4)}) == {0: q(0, -2)}
