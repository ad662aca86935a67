import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from douglas_energy import clifford as cl
from douglas_energy.clifford import Multivector, blade_product, embed_paravector, mv_conj, mv_mul, mv_parts

E1, E2, E12 = 1, 2, 3


def coeffs(m):
    return arrays(np.float64, 1 << m, elements=st.floats(-3, 3, allow_nan=False))


def test_blade_product_examples():
    assert blade_product(E1, E1, 2) == (0, -1)
    for mask in range(8):
        assert blade_product(0, mask, 3) == (mask, 1)
    assert blade_product(E1, E2, 2) == (E12, 1)
    assert blade_product(E2, E1, 2) == (E12, -1)


def test_blade_product_rejects_out_of_range_masks():
    with pytest.raises(ValueError):
        blade_product(4, 1, 2)
    with pytest.raises(ValueError):
        blade_product(0, -1, 2)


def test_quaternion_table():
    i, j, k = (Multivector.blade(b, 2) for b in (E1, E2, E12))
    one = Multivector.scalar_value(1.0, 2)
    table = {
        (i, i): -one, (j, j): -one, (k, k): -one,
        (i, j): k, (j, k): i, (k, i): j,
        (j, i): -k, (k, j): -i, (i, k): -j,
    }
    for (a, b), want in table.items():
        assert (a * b).allclose(want)


def test_mul_examples():
    a = Multivector(1, [1.0, 1.0])
    b = Multivector(1, [1.0, -1.0])
    assert mv_mul(a, b).allclose(2.0)
    q = Multivector(2, [0.3, -1.2, 0.5, 2.0])
    assert (q * 1.0).allclose(q)
    assert mv_mul(q, Multivector.scalar_value(1.0, 2)).allclose(q)
    with pytest.raises(ValueError):
        mv_mul(Multivector.blade(1, 2), Multivector.blade(1, 3))


def test_conj_examples():
    x = embed_paravector([2.0, 5.0])
    assert mv_conj(x).allclose(Multivector(1, [2.0, -5.0]))
    assert mv_conj(Multivector.blade(E12, 2)).allclose(Multivector.blade(E12, 2, -1.0))
    q = Multivector(2, [0.5, 0.5, 0.5, 0.5])
    assert (q * q.conj()).scalar == pytest.approx(1.0, abs=1e-15)


def test_parts_examples():
    s, ns, nrm = mv_parts(Multivector.scalar_value(3.0, 2))
    assert (s, nrm) == (3.0, 3.0) and ns.allclose(0.0)
    s, ns, nrm = mv_parts(Multivector.blade(E1, 2))
    assert (s, nrm) == (0.0, 1.0) and ns.allclose(Multivector.blade(E1, 2))
    s, ns, nrm = mv_parts(Multivector(2, [3.0, 4.0, 0.0, 0.0]))
    assert s == 3.0 and nrm == pytest.approx(5.0) and ns.allclose(Multivector.blade(E1, 2, 4.0))


def test_embed_paravector_examples(rng):
    assert embed_paravector([1.0, 0.0, 0.0]).allclose(1.0)
    assert embed_paravector([0.0, 1.0, 0.0]).allclose(Multivector.blade(E1, 2))
    p = rng.standard_normal(5)
    x = embed_paravector(p)
    assert x.norm() == pytest.approx(np.linalg.norm(p), rel=1e-15)
    assert np.count_nonzero(x.coeffs) <= 5
    with pytest.raises(ValueError):
        embed_paravector([1.0, 2.0, 3.0], m=3)


def test_coefficient_length_is_checked():
    with pytest.raises(ValueError):
        Multivector(2, [1.0, 2.0, 3.0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5).flatmap(lambda m: st.tuples(st.just(m), coeffs(m), coeffs(m), coeffs(m))))
def test_associative(args):
    m, a, b, c = args
    left = cl.geometric_product(cl.geometric_product(a, b, m), c, m)
    right = cl.geometric_product(a, cl.geometric_product(b, c, m), m)
    assert np.allclose(left, right, atol=1e-10 * (1 + np.abs(left).max()))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5).flatmap(lambda m: st.tuples(st.just(m), coeffs(m), coeffs(m))))
def test_conjugation_reverses_products(args):
    m, a, b = args
    lhs = cl.conjugate(cl.geometric_product(a, b, m), m)
    rhs = cl.geometric_product(cl.conjugate(b, m), cl.conjugate(a, m), m)
    assert np.allclose(lhs, rhs, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5).flatmap(lambda m: st.tuples(st.just(m), coeffs(m))))
def test_norm_is_scalar_part_of_x_conj_x(args):
    m, a = args
    sq = float(np.sum(a * a))
    assert cl.geometric_product(a, cl.conjugate(a, m), m)[0] == pytest.approx(sq, abs=1e-10)
    assert cl.geometric_product(cl.conjugate(a, m), a, m)[0] == pytest.approx(sq, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(coeffs(2), coeffs(2))
def test_quaternion_norm_is_multiplicative(a, b):
    assert cl.norm(cl.geometric_product(a, b, 2)) == pytest.approx(cl.norm(a) * cl.norm(b), rel=1e-12, abs=1e-12)


def test_norm_not_multiplicative_beyond_quaternions():
    # (1 + e1e2e3) has a zero divisor partner in Cl(0,3)
    a = np.zeros(8)
    a[0], a[7] = 1.0, 1.0
    b = np.zeros(8)
    b[0], b[7] = 1.0, -1.0
    assert cl.norm(cl.geometric_product(a, b, 3)) == pytest.approx(0.0, abs=1e-15)
    assert cl.norm(a) * cl.norm(b) == pytest.approx(2.0)


def test_product_is_deterministic(rng):
    a, b = rng.standard_normal((2, 16))
    assert np.array_equal(cl.geometric_product(a, b, 4), cl.geometric_product(a, b, 4))


def test_cl03_to_quaternion_is_a_homomorphism(rng):
    a, b = rng.standard_normal((2, 8))
    lhs = cl.cl03_to_quaternion(cl.geometric_product(a, b, 3))
    rhs = cl.geometric_product(cl.cl03_to_quaternion(a), cl.cl03_to_quaternion(b), 2)
    assert np.allclose(lhs, rhs, atol=1e-13)
    # paravectors map to quaternions with the same coordinates
    p = rng.standard_normal(4)
    assert np.allclose(cl.cl03_to_quaternion(cl.paravector_coeffs(p)), cl.quaternion_coeffs(p))


def test_homomorphism_rejects_commuting_images():
    with pytest.raises(ValueError):
        cl.homomorphism(np.zeros(4), 2, 2, images=(1, 1))
