"""Characteristic (spectral) polynomials of oriented domains.

P(z, w) = det K(z, w) is recovered as an exact Laurent polynomial from
point evaluations; for 2-colored domains Q(z, w) = det of the
black/white block satisfies P(z, w) = Q(z, w) Q(1/z, 1/w).  On the unit
torus P is real and nonnegative, and its zeros ("nodes") control the
finite-size behaviour of the quotient partition functions.
"""

import cmath
import math
from collections import namedtuple

import numpy as np

from .laurent import LaurentPoly2
from .lattice import verify_orientation, permutation_sign

NodeReport = namedtuple("NodeReport", ["location", "arguments", "hessian", "D", "tau", "kind"])

CriticalityReport = namedtuple(
    "CriticalityReport", ["kind", "nodes", "outside_conjectured_class"]
)

CLASS_NON_VANISHING = "non-vanishing"
CLASS_SINGLE_REAL = "single-real-node"
CLASS_TWO_REAL = "two-real-nodes"
CLASS_CONJUGATE = "distinct-conjugate-nodes"
CLASS_REAL_ROOT_Q = "real-root-of-Q"


class CharPolyError(ValueError):
    pass


class CharPoly:
    def __init__(self, dom, P, Q=None):
        self.dom = dom
        self.P = P
        self.Q = Q

    def p_eval(self, z, w):
        return self.P(z, w)


def build_charpoly(dom, check=True):
    """Spectral polynomial(s) of an oriented domain.

    Refuses domains that fail verify_orientation (their determinants do
    not count matchings with coherent signs).
    """
    if check:
        rep = verify_orientation(dom)
        if not (rep.faces_clockwise_odd and rep.m0_sign_positive
                and rep.alternating_cycles_positive):
            raise CharPolyError("domain signs fail verification: %r" % (rep.offending_items,))
    bound = (sum(abs(e.dx) for e in dom.edges), sum(abs(e.dy) for e in dom.edges))
    P = LaurentPoly2.from_evaluator(lambda z, w: np.linalg.det(dom.K(z, w)), bound)
    if not P.is_real(tol=1e-9):
        raise CharPolyError("P(z, w) came out non-real")
    P = P.real_part()
    diff = P - P.reciprocal_vars()
    scale = max(abs(c) for c in P.coeffs.values())
    if any(abs(c) > 1e-9 * scale for c in diff.coeffs.values()):
        raise CharPolyError("P(z, w) != P(1/z, 1/w)")
    Q = None
    if dom.bipartite:
        blacks, whites = dom.blacks(), dom.whites()
        pre = permutation_sign(blacks + whites)
        n = dom.k // 2
        pre *= (-1) ** (n * (n - 1) // 2)
        Q = LaurentPoly2.from_evaluator(lambda z, w: np.linalg.det(dom.Qblock(z, w)), bound)
        rng = np.random.default_rng(11)
        for _ in range(8):
            z = cmath.exp(2j * math.pi * rng.random())
            w = cmath.exp(2j * math.pi * rng.random())
            if abs(abs(Q(z, w)) ** 2 - P(z, w).real) > 1e-8 * max(scale, 1.0):
                raise CharPolyError("P != |Q|^2 on the unit torus")
        _ = pre  # Pf bridging sign; not needed for |Q|
    cp = CharPoly(dom, P, Q)
    if check:
        rr = np.linspace(-1, 1, 64, endpoint=False) + 1.0 / 64
        zz = np.exp(1j * math.pi * rr)
        vals = P(zz[:, None], zz[None, :]).real
        if vals.min() < -1e-9 * scale:
            raise CharPolyError("P is negative on the unit torus")
    return cp


# -- free energy ---------------------------------------------------------------


def free_energy(cp, method="richardson"):
    """Per-cell free energy f0 = mean of (1/2) log P over the unit torus.

    "richardson": midpoint grids N = 128, 256, 512 extrapolated with the
    model f + a/N^2 + b log(N)/N^2 (the log term captures node
    singularities).  "jensen": exact inner integral via root moduli;
    slower to write, several digits sharper.
    """
    if method == "jensen":
        return 0.5 * ronkin(cp.P, (0.0, 0.0))
    if method != "richardson":
        raise ValueError("unknown method %r" % (method,))
    Ns = (128, 256, 512)
    fs = []
    for N in Ns:
        th = 2 * math.pi * (np.arange(N) + 0.5) / N
        zz = np.exp(1j * th)
        vals = cp.P(zz[:, None], zz[None, :]).real
        if vals.min() <= 0:
            raise CharPolyError("P vanishes on the midpoint grid")
        fs.append(0.5 * float(np.mean(np.log(vals))))
    A = np.array([[1.0, 1.0 / N**2, math.log(N) / N**2] for N in Ns])
    coef = np.linalg.solve(A, np.array(fs))
    return float(coef[0])


# -- Ronkin function -----------------------------------------------------------


def _trimmed_slice(poly, z, axis, rel_tol=1e-12):
    """(ascending coeffs, valuation) of the w- (or z-) slice at the given point."""
    coeffs, jmin = (poly.slice_w(z) if axis == "w" else poly.slice_z(z))
    top = np.max(np.abs(coeffs))
    if top == 0.0:
        raise CharPolyError("slice vanishes identically")
    lo, hi = 0, len(coeffs)
    while hi - lo > 1 and abs(coeffs[hi - 1]) <= rel_tol * top:
        hi -= 1
    while hi - lo > 1 and abs(coeffs[lo]) <= rel_tol * top:
        lo += 1
    return coeffs[lo:hi], jmin + lo


def _slice_roots(poly, z, axis):
    c, jmin = _trimmed_slice(poly, z, axis)
    if len(c) == 1:
        return np.array([]), jmin, c[-1]
    return np.roots(c[::-1]), jmin, c[-1]


def _jensen_inner(poly, z, alpha2):
    """(1/2pi) integral of log|poly(z, w)| dw over |w| = e^alpha2, exactly."""
    roots, jmin, lead = _slice_roots(poly, z, "w")
    val = jmin * alpha2 + math.log(abs(lead))
    for r in roots:
        val += max(math.log(abs(r)), alpha2) if r != 0 else alpha2
    return val


def _inside_count(poly, z, alpha2):
    roots, jmin, _ = _slice_roots(poly, z, "w")
    return jmin + int(np.sum(np.abs(roots) < math.exp(alpha2)))


def _golden_min(f, lo, hi, iters=70):
    invphi = (math.sqrt(5.0) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def ronkin(poly, alpha, scan=384, gl_order=64):
    """Ronkin function R(alpha) = mean of log|poly| over the torus at level alpha.

    The inner integral (over the second variable) is evaluated exactly by
    Jensen's formula.  Its integrand kinks exactly where a root modulus
    meets the e^alpha2 circle, so those angles are hunted down (as zero
    minima of the log-modulus distance; inside-count changes alone miss
    crossings that pair up with a reciprocal partner) and each smooth
    piece between them gets Gauss-Legendre quadrature.
    """
    a1, a2 = float(alpha[0]), float(alpha[1])
    R1 = math.exp(a1)

    def g(theta):
        return _jensen_inner(poly, R1 * cmath.exp(1j * theta), a2)

    def dist(theta):
        roots, _jmin, _ = _slice_roots(poly, R1 * cmath.exp(1j * theta), "w")
        if len(roots) == 0:
            return math.inf
        moduli = np.abs(roots)
        moduli = moduli[moduli > 0]
        if len(moduli) == 0:
            return math.inf
        return float(np.min(np.abs(np.log(moduli) - a2)))

    thetas = np.linspace(0.0, 2 * math.pi, scan + 1)
    dv = np.array([dist(t) for t in thetas])
    dv[-1] = dv[0]
    cuts = {0.0, 2 * math.pi}
    for i in range(scan):
        prv, nxt = dv[(i - 1) % scan], dv[(i + 1) % scan]
        if dv[i] <= prv and dv[i] <= nxt and dv[i] < 0.2:
            lo = thetas[i] - 2 * math.pi / scan
            hi = thetas[i] + 2 * math.pi / scan
            x, fx = _golden_min(dist, lo, hi)
            if fx < 1e-7:
                cuts.add(x % (2 * math.pi))
    cuts = sorted(cuts)
    merged = [cuts[0]]
    for c in cuts[1:]:
        if c - merged[-1] > 1e-11:
            merged.append(c)
    x, wts = np.polynomial.legendre.leggauss(gl_order)
    total = 0.0
    for lo, hi in zip(merged[:-1], merged[1:]):
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        total += half * sum(w * g(mid + half * t) for t, w in zip(x, wts))
    return total / (2 * math.pi)


# -- nodes and criticality classes ---------------------------------------------


def _wrap_half_turns(x):
    y = math.fmod(x, 2.0)
    if y > 1.0:
        y -= 2.0
    elif y <= -1.0:
        y += 2.0
    return y


def _newton_node(P, r, s, Pz, Pw, Pzz, Pzw, Pww):
    for _ in range(80):
        z, w = cmath.exp(1j * math.pi * r), cmath.exp(1j * math.pi * s)
        g = -math.pi * np.array([complex(Pz(z, w)).imag, complex(Pw(z, w)).imag])
        if np.max(np.abs(g)) <= 1e-12:
            return r, s, True
        H = -math.pi**2 * np.array(
            [[complex(Pzz(z, w)).real, complex(Pzw(z, w)).real],
             [complex(Pzw(z, w)).real, complex(Pww(z, w)).real]]
        )
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            return r, s, False
        if not np.all(np.isfinite(step)) or np.max(np.abs(step)) > 0.25:
            return r, s, False
        r, s = r - step[0], s - step[1]
    return r, s, False


def _q_hessian(Q, z0, w0):
    Az = complex(Q.zdz()(z0, w0))
    Aw = complex(Q.wdw()(z0, w0))
    scale = max(abs(c) for c in Q.coeffs.values())
    if max(abs(Az), abs(Aw)) > 1e-7 * scale:
        # simple zero of Q: |Q|^2 is quadratic with gradient outer-product form
        return np.array([[abs(Az) ** 2, (Az * Aw.conjugate()).real],
                         [(Az * Aw.conjugate()).real, abs(Aw) ** 2]])
    # nodal zero of Q itself (P = |Q|^2 quartic): second-derivative form
    h11 = -complex(Q.zdz().zdz()(z0, w0)).real
    h12 = -complex(Q.zdz().wdw()(z0, w0)).real
    h22 = -complex(Q.wdw().wdw()(z0, w0)).real
    return np.array([[h11, h12], [h12, h22]])


def _p_hessian(cp, z0, w0):
    P = cp.P
    h11 = -complex(P.zdz().zdz()(z0, w0)).real / 2
    h12 = -complex(P.zdz().wdw()(z0, w0)).real / 2
    h22 = -complex(P.wdw().wdw()(z0, w0)).real / 2
    return np.array([[h11, h12], [h12, h22]])


def tau_of_hessian(H):
    """Half-period ratio (-B + i sqrt(det H)) / A_w of a positive form."""
    D = math.sqrt(max(np.linalg.det(H), 0.0))
    return complex(-H[0, 1], D) / H[1, 1]


def find_nodes(cp, grid=256, value_tol=1e-10):
    """Locate and classify the zeros of P on the unit torus.

    Returns a CriticalityReport whose kind is one of: non-vanishing,
    single-real-node, two-real-nodes, distinct-conjugate-nodes,
    real-root-of-Q.  Zeros of a non-colored domain away from the real
    points fall outside the supported classification and are flagged.
    """
    P = cp.P
    rr = -1.0 + 2.0 * (np.arange(grid) + 0.5) / grid
    zz = np.exp(1j * math.pi * rr)
    vals = P(zz[:, None], zz[None, :]).real
    scale = float(vals.max())
    Pz, Pw = P.zdz(), P.wdw()
    Pzz, Pzw, Pww = Pz.zdz(), Pz.wdw(), Pw.wdw()

    is_min = np.ones(vals.shape, dtype=bool)
    for axis in (0, 1):
        for shift in (1, -1):
            is_min &= vals <= np.roll(vals, shift, axis=axis)
    # real points are always stationary; seed them first so that a cluster of
    # near-converged candidates around a real zero keeps the exact location
    cand = [(r, s) for r in (0.0, 1.0) for s in (0.0, 1.0)]
    cand.extend((rr[i], rr[j]) for i, j in zip(*np.nonzero(is_min)))

    found = []
    for (r, s) in cand:
        r2, s2, ok = _newton_node(P, r, s, Pz, Pw, Pzz, Pzw, Pww)
        if not ok:
            continue
        z0, w0 = cmath.exp(1j * math.pi * r2), cmath.exp(1j * math.pi * s2)
        if abs(complex(P(z0, w0))) > value_tol * scale:
            continue
        r2, s2 = _wrap_half_turns(r2), _wrap_half_turns(s2)
        # dedup radius sized for quartic zeros, where |P| < tol already holds
        # at distance ~ tol^(1/4) and Newton stalls before full convergence
        for rknown, sknown in found:
            if (abs(_wrap_half_turns(r2 - rknown)) < 5e-3
                    and abs(_wrap_half_turns(s2 - sknown)) < 5e-3):
                break
        else:
            found.append((r2, s2))

    qscale = None
    if cp.Q is not None:
        qscale = max(abs(c) for c in cp.Q.coeffs.values())

    nodes = []
    outside = False
    for (r, s) in sorted(found):
        real_pt = abs(r - round(r)) < 1e-8 and abs(s - round(s)) < 1e-8
        if real_pt:
            r, s = float(round(r)), float(round(s))
            r, s = _wrap_half_turns(r) if r else 0.0, _wrap_half_turns(s) if s else 0.0
        z0, w0 = cmath.exp(1j * math.pi * r), cmath.exp(1j * math.pi * s)
        if real_pt:
            z0, w0 = complex(round(z0.real)), complex(round(w0.real))
        if real_pt and cp.Q is not None and abs(complex(cp.Q(z0, w0))) < 1e-8 * qscale:
            H = _q_hessian(cp.Q, z0, w0)
            kind = "real-root-of-Q-node"
        elif real_pt:
            H = _p_hessian(cp, z0, w0)
            kind = "real-node"
        elif cp.Q is not None:
            H = _q_hessian(cp.Q, z0, w0)
            kind = "conjugate-pair-member"
        else:
            H = _p_hessian(cp, z0, w0)
            kind = "conjugate-pair-member"
            outside = True
        if np.linalg.det(H) <= 0 or H[1, 1] <= 0:
            raise CharPolyError("degenerate node Hessian at (%g, %g)" % (r, s))
        D = math.sqrt(np.linalg.det(H))
        nodes.append(NodeReport((z0, w0), (r, s), H, D, tau_of_hessian(H), kind))

    kinds = [n.kind for n in nodes]
    if not nodes:
        cls = CLASS_NON_VANISHING
    elif kinds == ["real-root-of-Q-node"]:
        cls = CLASS_REAL_ROOT_Q
    elif all(k == "conjugate-pair-member" for k in kinds) and len(nodes) == 2:
        cls = CLASS_CONJUGATE
        nodes = order_conjugate_pair(cp, nodes)
    elif all(k == "real-node" for k in kinds):
        cls = CLASS_SINGLE_REAL if len(nodes) == 1 else CLASS_TWO_REAL
        if len(nodes) > 2:
            raise CharPolyError("more than two real nodes; unsupported curve")
    else:
        raise CharPolyError("unrecognized node pattern: %r" % (kinds,))
    return CriticalityReport(cls, nodes, outside)


# -- conjugate-node bookkeeping -------------------------------------------------


def decreasing_member(q, node_loc, eps=1e-4):
    """True when the node's w-root moves inside |w| = 1 as z rotates forward."""
    z0, w0 = node_loc
    z = z0 * cmath.exp(2j * math.pi * eps)
    roots, _jmin, _ = _slice_roots(q, z, "w")
    if len(roots) == 0:
        raise CharPolyError("node slice lost its roots")
    w = roots[np.argmin(np.abs(roots - w0))]
    return abs(w) < 1.0


def order_conjugate_pair(cp, nodes):
    """Distinguished (decreasing-root) member first."""
    if cp.Q is None:
        return nodes
    first_dec = decreasing_member(cp.Q, nodes[0].location)
    second_dec = decreasing_member(cp.Q, nodes[1].location)
    if first_dec == second_dec:
        raise CharPolyError("conjugate pair does not split into one decreasing member")
    return nodes if first_dec else [nodes[1], nodes[0]]


def root_counts(q, nodes=()):
    """Slice windings {('v', x): ..., ('h', y): ...} of Q at x, y = +-1.

    ('v', x) counts w-roots of Q(x, w) strictly inside the unit circle
    plus cancellation the w-valuation; ('h', y) the same with roles swapped.
    Roots on the unit circle are tolerated only at the supplied node
    locations.
    """
    node_zw = [n.location for n in nodes] if nodes else []
    out = {}
    for x in (1.0, -1.0):
        for axis, key in (("w", ("v", int(x))), ("z", ("h", int(x)))):
            roots, jmin, _ = _slice_roots(q, x, axis)
            inside = 0
            for rt in roots:
                m = abs(rt)
                if m < 1.0 - 1e-8:
                    inside += 1
                elif m <= 1.0 + 1e-8:
                    near_node = any(
                        abs(x - (loc[0] if axis == "w" else loc[1])) < 1e-6
                        and abs(rt - (loc[1] if axis == "w" else loc[0])) < 1e-6
                        for loc in node_zw
                    )
                    if not near_node:
                        raise CharPolyError(
                            "slice root on the unit circle away from any node"
                        )
            out[key] = inside + jmin
    return out


# -- Ronkin gradient bookkeeping -------------------------------------------------


def node_at_level(q, node, alpha):
    """Continue a unit-torus node of Q to the torus |z|=e^a1, |w|=e^a2.

    Returns the half-turn arguments (r, s) of the continued zero."""
    a1, a2 = float(alpha[0]), float(alpha[1])
    r, s = node.arguments
    qz, qw = q.zdz(), q.wdw()
    for _ in range(100):
        z = cmath.exp(a1 + 1j * math.pi * r)
        w = cmath.exp(a2 + 1j * math.pi * s)
        val = complex(q(z, w))
        J = np.array([
            [(1j * math.pi * complex(qz(z, w))).real, (1j * math.pi * complex(qw(z, w))).real],
            [(1j * math.pi * complex(qz(z, w))).imag, (1j * math.pi * complex(qw(z, w))).imag],
        ])
        rhs = np.array([val.real, val.imag])
        if np.max(np.abs(rhs)) < 1e-13:
            return r, s
        step = np.linalg.solve(J, rhs)
        r, s = r - step[0], s - step[1]
    raise CharPolyError("node continuation did not converge")


def level_windings(q, alpha):
    """Slice windings of Q along the -1 arcs of the level-alpha torus."""
    a1, a2 = float(alpha[0]), float(alpha[1])
    out = {}
    roots, jmin, _ = _slice_roots(q, -math.exp(a1), "w")
    out["v"] = jmin + int(np.sum(np.abs(roots) < math.exp(a2)))
    roots, jmin, _ = _slice_roots(q, -math.exp(a2), "z")
    out["h"] = jmin + int(np.sum(np.abs(roots) < math.exp(a1)))
    return out


def ronkin_gradient_prediction(cp, alpha):
    """Predicted gradient (l_h + s0(alpha), l_v - r0(alpha)) of the Q-Ronkin."""
    rep = find_nodes(cp)
    if rep.kind != CLASS_CONJUGATE or cp.Q is None:
        raise CharPolyError("gradient formula needs a distinct-conjugate-node curve")
    node = rep.nodes[0]
    r0, s0 = node_at_level(cp.Q, node, alpha)
    wind = level_windings(cp.Q, alpha)
    return {
        "r0": r0, "s0": s0, "l_h": wind["h"], "l_v": wind["v"],
        "gradient": (wind["h"] + s0, wind["v"] - r0),
    }
