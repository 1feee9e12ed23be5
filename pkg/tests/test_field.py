import pytest
from hypothesis import given, strategies as st

from hsagg.field import ModulusMismatch, PrimeField, ZeroInverse, is_prime

PRIMES = [2, 3, 5, 7, 11, 13]


def test_primality_check():
    assert [p for p in range(2, 30) if is_prime(p)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert not is_prime(1)
    assert not is_prime(0)
    assert not is_prime(-7)


def test_composite_modulus_rejected():
    for bad in (1, 4, 6, 9, 15):
        with pytest.raises(ValueError):
            PrimeField(bad)
    with pytest.raises(ValueError):
        PrimeField(True)


def test_addition():
    f7 = PrimeField(7)
    assert f7.element(5) + f7.element(4) == f7.element(2)
    f3 = PrimeField(3)
    assert f3.element(2) + f3.element(2) == f3.element(1)
    for x in range(7):
        assert f7.zero() + f7.element(x) == f7.element(x)


def test_multiplication():
    f7 = PrimeField(7)
    assert f7.element(3) * f7.element(3) == f7.element(2)
    assert f7.element(4) * f7.element(4) == f7.element(2)
    for x in range(7):
        assert f7.one() * f7.element(x) == f7.element(x)


def test_inverse():
    f7 = PrimeField(7)
    assert f7.element(2).inv() == f7.element(4)
    assert f7.element(1).inv() == f7.element(1)
    assert PrimeField(5).element(3).inv() == PrimeField(5).element(2)
    with pytest.raises(ZeroInverse):
        f7.zero().inv()
    with pytest.raises(ZeroInverse):
        f7.inv(0)


def test_power():
    f7 = PrimeField(7)
    assert f7.element(3) ** 2 == f7.element(2)
    assert f7.element(4) ** 2 == f7.element(2)
    for x in range(7):
        assert f7.element(x) ** 0 == f7.one()
    with pytest.raises(ValueError):
        f7.pow(3, -1)


def test_modulus_mismatch():
    a = PrimeField(7).element(3)
    b = PrimeField(5).element(3)
    with pytest.raises(ModulusMismatch):
        a + b
    with pytest.raises(ModulusMismatch):
        a * b


def test_int_interop_and_canonical_form():
    f7 = PrimeField(7)
    assert f7.element(10) == f7.element(3)
    assert (f7.element(3) + 6).value == 2
    assert int(2 * f7.element(4)) == 1
    assert (3 - f7.element(5)).value == 5
    assert -f7.element(2) == f7.element(5)
    assert f7.element(3) / f7.element(5) == f7.element(2)


@st.composite
def field_and_values(draw, count):
    q = draw(st.sampled_from(PRIMES))
    f = PrimeField(q)
    vals = [f.element(draw(st.integers(0, q - 1))) for _ in range(count)]
    return (f, *vals)


@given(field_and_values(3))
def test_field_axioms(fv):
    _, a, b, c = fv
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a + b == b + a
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c


@given(field_and_values(1))
def test_inverse_cancels(fv):
    _, a = fv
    if a.value != 0:
        assert a * a.inv() == 1


@given(field_and_values(1), st.integers(0, 16))
def test_pow_matches_repeated_multiplication(fv, e):
    f, a = fv
    acc = f.one()
    for _ in range(e):
        acc = acc * a
    assert a**e == acc


def test_elements_enumeration():
    f5 = PrimeField(5)
    assert [int(x) for x in f5.elements()] == [0, 1, 2, 3, 4]
    assert hash(f5.element(2)) == hash(PrimeField(5).element(7))
