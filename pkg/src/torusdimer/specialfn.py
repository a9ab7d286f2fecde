"""Theta functions, the Dedekind eta function, and discrete Gaussians.

Conventions: the nome is q = exp(pi i tau), characteristics (r, s) take
values in {0, 1}, and

    theta_rs(nu | tau) = sum_{j in Z + r/2} exp(pi i tau j^2 + 2 pi i j (nu + s/2)).

For (r, s) = (1, 1) this includes the customary factor i (-1)^(j-1/2)
automatically, since exp(pi i j) = i (-1)^(j-1/2) for half-integer j.

The ratio statistic used throughout the finite-size analysis is

    xi(zeta, xi | tau) = | theta(phi tau - psi | tau) exp(pi i tau phi^2) | / | eta(tau) |

with zeta = -exp(2 pi i phi), xi = -exp(2 pi i psi); it is computed from a
rescaled series so that it stays finite in floating point even when theta
and eta individually underflow.
"""

import cmath
import math

import numpy as np

TAU_IM_FLOOR = 1e-3
_TRUNC = 1e-16


def _check_tau(tau):
    tau = complex(tau)
    if tau.imag < TAU_IM_FLOOR:
        raise ValueError(
            "Im tau = %g below the %g floor; use reduce_tau first" % (tau.imag, TAU_IM_FLOOR)
        )
    return tau


def theta(r, s, nu, tau):
    """Jacobi theta with characteristics r, s in {0, 1}; nome exp(pi i tau)."""
    tau = _check_tau(tau)
    nu = complex(nu)
    r, s = int(r) % 2, int(s) % 2
    j0 = r / 2.0
    total = 0j
    small_streak = 0
    for n in range(0, 4000):
        shell = 0j
        for j in ((j0 + n,) if (n == 0 and r == 0) else (j0 + n, j0 - n - r)):
            # for r=0 the shells are {0}, {1,-1}, {2,-2}, ...;
            # for r=1 they are {1/2,-1/2}, {3/2,-3/2}, ...
            shell += cmath.exp(1j * math.pi * tau * j * j + 2j * math.pi * j * (nu + s / 2.0))
        total += shell
        if abs(shell) < _TRUNC * max(abs(total), 1e-300):
            small_streak += 1
            if small_streak >= 3:
                break
        else:
            small_streak = 0
    return total


def theta_product(r, s, nu, tau):
    """Product form of the same theta functions (independent cross-check)."""
    tau = _check_tau(tau)
    nu = complex(nu)
    q = cmath.exp(1j * math.pi * tau)
    u = cmath.exp(2j * math.pi * nu)
    nmax = max(8, int(40.0 / tau.imag) + 4)
    G = 1.0 + 0j
    for j in range(1, nmax + 1):
        G *= 1 - q ** (2 * j)
    r, s = int(r) % 2, int(s) % 2
    prod = 1.0 + 0j
    if (r, s) == (0, 0):
        for j in range(1, nmax + 1):
            prod *= (1 + q ** (2 * j - 1) * u) * (1 + q ** (2 * j - 1) / u)
        return G * prod
    if (r, s) == (0, 1):
        for j in range(1, nmax + 1):
            prod *= (1 - q ** (2 * j - 1) * u) * (1 - q ** (2 * j - 1) / u)
        return G * prod
    if (r, s) == (1, 0):
        for j in range(1, nmax + 1):
            prod *= (1 + q ** (2 * j) * u) * (1 + q ** (2 * j) / u)
        return G * prod * q ** 0.25 * (u ** 0.5 + u ** -0.5)
    for j in range(1, nmax + 1):
        prod *= (1 - q ** (2 * j) * u) * (1 - q ** (2 * j) / u)
    return G * prod * 1j * q ** 0.25 * (u ** 0.5 - u ** -0.5)


def eta(tau):
    """Dedekind eta, q^(1/12) prod (1 - q^(2j))."""
    tau = _check_tau(tau)
    q2 = cmath.exp(2j * math.pi * tau)
    out = cmath.exp(1j * math.pi * tau / 12.0)
    term = 1.0 + 0j
    qp = 1.0 + 0j
    for _ in range(2_000_000):
        qp *= q2
        if abs(qp) < 1e-18:
            break
        term *= 1 - qp
    return out * term


def log_abs_eta(tau):
    tau = _check_tau(tau)
    out = -math.pi * tau.imag / 12.0
    q2 = cmath.exp(2j * math.pi * tau)
    qp = 1.0 + 0j
    for _ in range(2_000_000):
        qp *= q2
        if abs(qp) < 1e-18:
            break
        out += math.log(abs(1 - qp))
    return out


def _phase_frac(c):
    """arg(c) / 2pi reduced to (-1/2, 1/2]."""
    t = cmath.phase(complex(c)) / (2 * math.pi)
    if t <= -0.5:
        t += 1.0
    return t


def log_xi(zeta, xi_, tau):
    """log of xi(zeta, xi | tau); -inf at the odd characteristic."""
    tau = _check_tau(tau)
    phi = _phase_frac(-complex(zeta))
    psi = _phase_frac(-complex(xi_))
    jstar = -round(phi)
    base = -math.pi * tau.imag * (jstar + phi) ** 2
    total = 0j
    small_streak = 0
    for n in range(0, 4000):
        shell = 0j
        for j in ((jstar,) if n == 0 else (jstar + n, jstar - n)):
            expo = 1j * math.pi * tau * (j + phi) ** 2 - 2j * math.pi * j * psi - base
            shell += cmath.exp(expo)
        total += shell
        ref = max(abs(total), 1.0)
        if abs(shell) < _TRUNC * ref:
            small_streak += 1
            if small_streak >= 3:
                break
        else:
            small_streak = 0
    mag = abs(total)
    if mag == 0.0:
        return -math.inf
    return math.log(mag) + base - log_abs_eta(tau)


def xi(zeta, xi_, tau):
    """The positive theta/eta ratio at unimodular arguments (zeta, xi)."""
    lx = log_xi(zeta, xi_, tau)
    return 0.0 if lx == -math.inf else math.exp(lx)


def xi_rs(r, s, zeta, xi_, tau):
    """Characteristic-shifted ratio: xi((-1)^r zeta, (-1)^s xi | tau)."""
    return xi((-1) ** (int(r) % 2) * complex(zeta), (-1) ** (int(s) % 2) * complex(xi_), tau)


def reduce_tau(tau):
    """Bring tau into |Re tau| <= 1/2, |tau| >= 1 by T/S moves.

    Returns (tau_reduced, ops) where ops is a list of ('T', n) entries
    (tau -> tau + n) and 'S' entries (tau -> -1/tau), in the order applied.
    """
    tau = complex(tau)
    if tau.imag <= 0:
        raise ValueError("tau must lie in the upper half-plane")
    ops = []
    for _ in range(10_000):
        n = -int(round(tau.real))
        if n != 0:
            tau += n
            ops.append(("T", n))
        if abs(tau) < 1.0 - 1e-15:
            tau = -1.0 / tau
            ops.append("S")
        else:
            break
    return tau, ops


def transform_xi_args(r, s, zeta, xi_, ops):
    """Push xi characteristics through the modular moves from reduce_tau.

    If reduce_tau(tau) produced ops, then
    xi_rs(r, s, zeta, xi | tau) equals xi_rs(*transform_xi_args(r, s, zeta, xi, ops) | tau_reduced).
    """
    r, s = int(r) % 2, int(s) % 2
    zeta, xi_ = complex(zeta), complex(xi_)
    for op in ops:
        if op == "S":
            r, s, zeta, xi_ = s, r, xi_.conjugate(), zeta
        else:
            n = op[1]
            if n >= 0:  # tau -> tau + n, one step at a time
                for _ in range(n):
                    r, s, zeta, xi_ = r, (r + s) % 2, zeta, zeta * xi_
            else:
                for _ in range(-n):
                    r, s, zeta, xi_ = r, (r + s) % 2, zeta, zeta.conjugate() * xi_
    return r, s, zeta, xi_


def g_tau(tau, e1, e2):
    """The real quadratic form (e1^2 + 2 Re(tau) e1 e2 + |tau|^2 e2^2) / Im tau."""
    tau = complex(tau)
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    val = (e1 * e1 + 2 * tau.real * e1 * e2 + abs(tau) ** 2 * e2 * e2) / tau.imag
    return val if val.shape else float(val)


def discrete_gaussian(mu, sigma, window=None, tail=1e-12):
    """Probability table on Z^2 with weights exp(-pi/2 (e-mu)^T Sigma^-1 (e-mu)).

    Returns a dict {(n1, n2): probability} normalized over all of Z^2
    (the truncation radius is grown until the neglected tail is below
    `tail` relative to the total).  If `window` is given as
    ((lo1, hi1), (lo2, hi2)) only cells inside it are returned, still with
    the full-lattice normalization.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    sigma_inv = np.linalg.inv(sigma)
    evals = np.linalg.eigvalsh(sigma_inv)
    if np.min(evals) <= 0:
        raise ValueError("covariance must be positive definite")
    rad = math.sqrt(2 * (-math.log(tail) + 40.0) / (math.pi * np.min(evals))) + 2.0
    for _ in range(60):
        r = int(math.ceil(rad))
        n1 = np.arange(math.floor(mu[0]) - r, math.floor(mu[0]) + r + 1)
        n2 = np.arange(math.floor(mu[1]) - r, math.floor(mu[1]) + r + 1)
        g1, g2 = np.meshgrid(n1, n2, indexing="ij")
        d1 = g1 - mu[0]
        d2 = g2 - mu[1]
        quad = (
            sigma_inv[0, 0] * d1 * d1
            + 2 * sigma_inv[0, 1] * d1 * d2
            + sigma_inv[1, 1] * d2 * d2
        )
        mass = np.exp(-0.5 * math.pi * quad)
        total = float(mass.sum())
        border = float(mass[0, :].sum() + mass[-1, :].sum() + mass[:, 0].sum() + mass[:, -1].sum())
        if border < tail * total / 10.0:
            break
        rad *= 1.5
    else:
        raise ValueError("tail target unattainable")
    out = {}
    if window is not None:
        (lo1, hi1), (lo2, hi2) = window
    for a in range(mass.shape[0]):
        for b in range(mass.shape[1]):
            p = mass[a, b] / total
            if p < 1e-300:
                continue
            e = (int(n1[a]), int(n2[b]))
            if window is not None and not (lo1 <= e[0] <= hi1 and lo2 <= e[1] <= hi2):
                continue
            out[e] = p
    return out
