import math

import numpy as np

from torusdimer import fsc, kasteleyn, lattice


def hexa():
    return lattice.builtin("hexagonal")


def test_masses_are_normalized_and_centered():
    table = kasteleyn.winding_distribution_exact(hexa(), np.diag((3, 3)))
    probs = table.as_dict()
    assert abs(sum(probs.values()) - 1.0) < 1e-12
    mean = [sum(k[i] * v for k, v in probs.items()) for i in (0, 1)]
    assert abs(mean[0] - 1.0) < 1e-12 and abs(mean[1] - 1.0) < 1e-12


def test_mass_multiset_invariant_under_basis_change():
    # a unimodular change of homology basis relabels winding classes
    dom = hexa()
    E = np.diag((3, 3))
    base = sorted(kasteleyn.winding_distribution_exact(dom, E).as_dict().values())
    for T in (np.array([[1, 1], [0, 1]]), np.array([[0, -1], [1, 0]]),
              np.array([[2, 1], [1, 1]])):
        other = kasteleyn.winding_distribution_exact(dom, T @ E).as_dict()
        vals = sorted(other.values())
        assert np.allclose(base[-12:], vals[-12:], atol=1e-12)


def test_law_mean_transforms_contravariantly():
    dom = hexa()
    E = np.diag((3, 3))
    mu = np.array(fsc.winding_law(dom, E).mu)
    for T in (np.array([[1, 1], [0, 1]]), np.array([[1, 0], [-1, 1]])):
        got = np.array(fsc.winding_law(dom, T @ E).mu)
        want = np.linalg.inv(T).T @ mu
        assert np.allclose(got, want, atol=1e-9)


def test_gaussian_model_sharpens_with_size():
    dom = hexa()
    tvs = []
    for m in (3, 6):
        E = np.array([[m, m], [-m, m]])
        exact = kasteleyn.winding_distribution_exact(dom, E)
        model = fsc.winding_distribution_gaussian(dom, E)
        tvs.append(exact.tv_against(model))
    assert tvs[1] < tvs[0]
    assert tvs[1] < 0.1


def test_folding_window_consistency():
    dom = hexa()
    E = np.diag((3, 3))
    wide = kasteleyn.winding_distribution_exact(dom, E, M=16).as_dict()
    narrow = kasteleyn.winding_distribution_exact(dom, E, M=6).as_dict()
    for key, val in narrow.items():
        if val > 1e-9:
            assert abs(wide.get(key, 0.0) - val) < 1e-12


def test_variance_tracks_law_sigma():
    dom = hexa()
    E = np.array([[4, 4], [-4, 4]])
    law = fsc.winding_law(dom, E)
    probs = kasteleyn.winding_distribution_exact(dom, E).as_dict()
    mean = np.array([sum(k[i] * v for k, v in probs.items()) for i in (0, 1)])
    cov = np.zeros((2, 2))
    for k, v in probs.items():
        d = np.array(k, dtype=float) - mean
        cov += v * np.outer(d, d)
    # discrete-Gaussian covariance of exp(-pi/2 e Sigma^-1 e) approaches
    # Sigma/pi as the lattice refines; sizes this small track it loosely
    assert np.allclose(cov, np.array(law.sigma) / math.pi, rtol=0.2, atol=0.02)
