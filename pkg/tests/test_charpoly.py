import cmath
import math

import numpy as np
import pytest

from torusdimer import charpoly, lattice
from torusdimer.charpoly import (
    CLASS_CONJUGATE,
    CLASS_NON_VANISHING,
    CLASS_REAL_ROOT_Q,
    CLASS_SINGLE_REAL,
    CLASS_TWO_REAL,
    CharPoly,
    CharPolyError,
    build_charpoly,
    find_nodes,
    free_energy,
    ronkin,
    ronkin_gradient_prediction,
    root_counts,
    tau_of_hessian,
)
from torusdimer.laurent import LaurentPoly2

CATALAN = 0.915965594177219015


def critical_fisher():
    s = math.sqrt(2.0) + 1.0
    return lattice.builtin("fisher", a=s, b=s, c=1.0)


def test_charpoly_matches_K_determinant():
    dom = lattice.builtin("hexagonal", a=1.0, b=2.0, c=3.0)
    cp = build_charpoly(dom)
    rng = np.random.default_rng(3)
    for _ in range(10):
        z = cmath.exp(2j * math.pi * rng.random())
        w = cmath.exp(2j * math.pi * rng.random())
        det = np.linalg.det(dom.K(z, w))
        assert abs(cp.P(z, w) - det) < 1e-10 * max(1.0, abs(det))


def test_bipartite_factorisation():
    dom = lattice.builtin("square-bip", a=1.5, b=0.7)
    cp = build_charpoly(dom)
    assert cp.Q is not None
    rng = np.random.default_rng(4)
    for _ in range(10):
        z = cmath.exp(2j * math.pi * rng.random())
        w = cmath.exp(2j * math.pi * rng.random())
        lhs = complex(cp.P(z, w))
        rhs = complex(cp.Q(z, w)) * complex(cp.Q(1 / z, 1 / w))
        assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))


def test_build_rejects_broken_signs():
    dom = lattice.builtin("fisher")
    signs = [e.sign for e in dom.edges]
    signs[2] = -signs[2]
    with pytest.raises(CharPolyError):
        build_charpoly(dom.with_signs(signs))


def test_square_free_energy_is_two_catalan_over_pi():
    cp = build_charpoly(lattice.builtin("square-2x1"))
    want = 2 * CATALAN / math.pi
    assert abs(free_energy(cp, method="richardson") - want) < 1e-5
    assert abs(free_energy(cp, method="jensen") - want) < 1e-9


def test_hexagonal_free_energy():
    cp = build_charpoly(lattice.builtin("hexagonal"))
    # (1/pi) Cl2(pi/3) with Cl2 the Clausen function, frozen here
    assert abs(free_energy(cp, method="jensen") - 0.3230659472269729) < 1e-10


def test_gaseous_free_energy_is_log_dominant_weight():
    cp = build_charpoly(lattice.builtin("hexagonal", a=3.0))
    assert abs(free_energy(cp, method="jensen") - math.log(3.0)) < 1e-12
    assert abs(free_energy(cp, method="richardson") - math.log(3.0)) < 1e-8


def test_ronkin_basics():
    cp = build_charpoly(lattice.builtin("hexagonal"))
    # R(0, 0) is twice the free energy; R is convex and grows linearly far out
    assert abs(ronkin(cp.P, (0.0, 0.0)) - 2 * free_energy(cp, method="jensen")) < 1e-9
    r0 = ronkin(cp.P, (0.0, 0.0))
    r1 = ronkin(cp.P, (0.4, 0.0))
    r2 = ronkin(cp.P, (0.8, 0.0))
    assert r2 - r1 >= r1 - r0 - 1e-9  # midpoint convexity along a ray


CLASS_CASES = [
    ("hexagonal", dict(a=1.0, b=1.0, c=1.0), CLASS_CONJUGATE),
    ("square-bip", dict(a=1.0, b=1.0), CLASS_CONJUGATE),
    ("square-2x1", dict(a=1.0, b=1.0), CLASS_TWO_REAL),
    ("square-1x2", dict(a=1.0, b=2.0), CLASS_TWO_REAL),
    ("rhombi-3464", dict(a=1.0, b=1.0, c=1.0), CLASS_NON_VANISHING),
    ("hexagonal", dict(a=3.0, b=1.0, c=1.0), CLASS_NON_VANISHING),
]


@pytest.mark.parametrize("name,weights,want", CLASS_CASES)
def test_classification(name, weights, want):
    rep = find_nodes(build_charpoly(lattice.builtin(name, **weights)))
    assert rep.kind == want
    assert not rep.outside_conjectured_class


def test_classification_single_real_node():
    rep = find_nodes(build_charpoly(critical_fisher()))
    assert rep.kind == CLASS_SINGLE_REAL
    node = rep.nodes[0]
    assert node.location == (1 + 0j, 1 + 0j)
    assert node.kind == "real-node"
    assert np.linalg.det(node.hessian) > 0


def test_classification_real_root_of_Q():
    # synthetic bipartite curve: Q has a positive node at the real point (1,1),
    # so P = Q^2 vanishes to fourth order there
    Q = LaurentPoly2({(0, 0): 4.0, (1, 0): -1.0, (-1, 0): -1.0, (0, 1): -1.0, (0, -1): -1.0})
    rep = find_nodes(CharPoly(None, Q * Q, Q))
    assert rep.kind == CLASS_REAL_ROOT_Q
    assert rep.nodes[0].location == (1 + 0j, 1 + 0j)
    assert rep.nodes[0].kind == "real-root-of-Q-node"


def test_conjugate_pair_ordering_and_location():
    rep = find_nodes(build_charpoly(lattice.builtin("hexagonal")))
    (z1, w1), (z2, w2) = rep.nodes[0].location, rep.nodes[1].location
    assert abs(z1 - z2.conjugate()) < 1e-8 and abs(w1 - w2.conjugate()) < 1e-8
    # node arguments announced as (1/3, -1/3) in half-turn units
    r, s = rep.nodes[0].arguments
    assert abs(abs(r) - 1 / 3) < 1e-8 and abs(abs(s) - 1 / 3) < 1e-8


def test_degenerate_hessian_is_an_error():
    # a = b + c sits on the gaseous boundary: parabolic point, not a node
    with pytest.raises(CharPolyError):
        find_nodes(build_charpoly(lattice.builtin("hexagonal", a=2.0)))


def test_tau_of_hessian_hexagonal_shape():
    cp = build_charpoly(lattice.builtin("hexagonal"))
    rep = find_nodes(cp)
    H = rep.nodes[0].hessian
    for m, n in ((3, 3), (2, 5), (7, 2)):
        E = np.array([[m, m], [-n, n]])
        Einv = np.linalg.inv(E)
        tau = tau_of_hessian(Einv.T @ H @ Einv)
        want = 1j * n / (math.sqrt(3.0) * m)
        assert abs(tau - want) < 1e-9


def test_root_counts_hexagonal():
    cp = build_charpoly(lattice.builtin("hexagonal"))
    rep = find_nodes(cp)
    counts = root_counts(cp.Q, rep.nodes)
    assert set(counts) == {("v", 1), ("v", -1), ("h", 1), ("h", -1)}
    for v in counts.values():
        assert isinstance(v, int)


def test_ronkin_gradient_prediction_matches_central_differences():
    cp = build_charpoly(lattice.builtin("hexagonal"))
    alpha = (0.05, -0.03)
    pred = ronkin_gradient_prediction(cp, alpha)
    h = 1e-3
    gx = (ronkin(cp.Q, (alpha[0] + h, alpha[1])) - ronkin(cp.Q, (alpha[0] - h, alpha[1]))) / (2 * h)
    gy = (ronkin(cp.Q, (alpha[0], alpha[1] + h)) - ronkin(cp.Q, (alpha[0], alpha[1] - h))) / (2 * h)
    assert abs(gx - pred["gradient"][0]) < 1e-3
    assert abs(gy - pred["gradient"][1]) < 1e-3


def test_gradient_prediction_requires_conjugate_class():
    with pytest.raises(CharPolyError):
        ronkin_gradient_prediction(build_charpoly(critical_fisher()), (0.01, 0.0))
