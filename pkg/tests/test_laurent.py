import numpy as np
import pytest

from torusdimer.laurent import LaurentPoly2, DegreeBoundError

rng = np.random.default_rng(20240818)


def random_poly(nterms=6, span=3):
    coeffs = {}
    while len(coeffs) < nterms:
        i = int(rng.integers(-span, span + 1))
        j = int(rng.integers(-span, span + 1))
        coeffs[(i, j)] = complex(rng.normal(), rng.normal())
    return LaurentPoly2(coeffs)


def test_call_matches_monomial_sum():
    p = random_poly()
    for _ in range(10):
        z = complex(rng.normal(), rng.normal()) or 1.0
        w = complex(rng.normal(), rng.normal()) or 1.0
        direct = sum(c * z**i * w**j for (i, j), c in p.coeffs.items())
        assert abs(p(z, w) - direct) <= 1e-12 * max(1.0, abs(direct))


def test_call_vectorized():
    p = random_poly()
    zs = np.exp(2j * np.pi * rng.random(7))
    ws = np.exp(2j * np.pi * rng.random(7))
    vec = p(zs, ws)
    for k in range(7):
        assert abs(vec[k] - p(complex(zs[k]), complex(ws[k]))) < 1e-12


def test_from_evaluator_roundtrip():
    p = random_poly(nterms=8, span=4)
    q = LaurentPoly2.from_evaluator(lambda z, w: p(z, w), bound=4)
    assert q.coeffs.keys() == p.coeffs.keys()
    for key, c in p.coeffs.items():
        assert abs(q.coeffs[key] - c) < 1e-10


def test_from_evaluator_rejects_undersized_bound():
    p = LaurentPoly2({(3, 0): 1.0, (0, -3): 1.0})
    with pytest.raises(DegreeBoundError):
        LaurentPoly2.from_evaluator(lambda z, w: p(z, w), bound=2)


def test_arithmetic():
    p, q = random_poly(), random_poly()
    z = complex(0.3, 0.4)
    w = complex(-1.1, 0.2)
    assert abs((p + q)(z, w) - (p(z, w) + q(z, w))) < 1e-12
    assert abs((p - q)(z, w) - (p(z, w) - q(z, w))) < 1e-12
    assert abs((p * q)(z, w) - p(z, w) * q(z, w)) < 1e-10
    assert abs((-p)(z, w) + p(z, w)) < 1e-14


def test_euler_derivatives():
    # z d/dz and w d/dw act on monomials as multiplication by the exponent
    p = random_poly()
    z, w = complex(0.7, 0.1), complex(0.2, -0.9)
    dz = sum(i * c * z**i * w**j for (i, j), c in p.coeffs.items())
    dw = sum(j * c * z**i * w**j for (i, j), c in p.coeffs.items())
    assert abs(p.zdz()(z, w) - dz) < 1e-12
    assert abs(p.wdw()(z, w) - dw) < 1e-12


def test_variable_transforms():
    p = random_poly()
    z, w = complex(0.5, 0.5), complex(1.2, -0.3)
    assert abs(p.reciprocal_vars()(z, w) - p(1 / z, 1 / w)) < 1e-12
    assert abs(p.scale_vars(2.0, -0.5)(z, w) - p(2 * z, -0.5 * w)) < 1e-12


def test_slices():
    p = random_poly()
    z0 = complex(0.9, 0.435)
    w0 = complex(-0.62, 0.78)
    cw, jmin = p.slice_w(z0)  # ascending coefficients in w
    cz, imin = p.slice_z(w0)
    assert abs(np.polyval(cw[::-1], w0) * w0**jmin - p(z0, w0)) < 1e-10
    assert abs(np.polyval(cz[::-1], z0) * z0**imin - p(z0, w0)) < 1e-10


def test_real_detection():
    p = LaurentPoly2({(1, 0): 1.0, (-1, 0): 1.0, (0, 0): 2.0})
    assert p.is_real()
    q = LaurentPoly2({(1, 0): 1.0 + 0.5j})
    assert not q.is_real()
    assert p.real_part().coeffs[(0, 0)] == pytest.approx(2.0)
