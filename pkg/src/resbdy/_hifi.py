"""High-precision linear-solve lane.

Pinned free systems on networks with geometrically growing conductances are
numerically singular in float64 once the window's conductance dynamic range
passes ~1e12 (the finite-energy harmonic direction shrinks the scaled spectrum
like 1/sum c(x)). This lane runs field-generic Gaussian elimination over
either exact rationals (Fraction) or mpmath floats whose working precision is
chosen from the window's dynamic range, so deep windows stay meaningful.

Elimination is sparse (dict rows) without pivoting; the systems are symmetric
M-matrices, whose Schur complements stay M-matrices, so pivots never vanish.
Unknowns are eliminated far-to-near (descending level), which keeps layered
families banded.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath as mp
import numpy as np

from .errors import SingularSystem


def dynamic_range(net, edge_mask):
    ec = net.ec[edge_mask]
    if len(ec) == 0:
        return 1.0
    return float(ec.max() / ec.min())


def _log10_fraction(fr: Fraction):
    return (fr.numerator.bit_length() - fr.denominator.bit_length()) * 0.30103


def log10_range(net, edge_mask):
    """log10 of cmax/cmin over the window, robust to an inf float mirror."""
    ec = net.ec[edge_mask]
    if len(ec) == 0:
        return 0.0
    if np.all(np.isfinite(ec)):
        return math.log10(ec.max() / ec.min())
    idx = np.flatnonzero(edge_mask)
    logs = [_log10_fraction(net.exact_conductance(int(k))) for k in idx]
    return max(logs) - min(logs)


def auto_dps(net, edge_mask, n_unknowns):
    return 40 + int(log10_range(net, edge_mask) + 1) + \
        int(2 * math.log10(n_unknowns + 2))


class FractionField:
    name = "fraction"
    zero = Fraction(0)

    @staticmethod
    def conv(fr: Fraction):
        return fr

    @staticmethod
    def to_float(x):
        return float(x)


class MPField:
    name = "mp"

    def __init__(self, dps):
        self.dps = dps
        self.zero = mp.mpf(0)

    @staticmethod
    def conv(fr: Fraction):
        return mp.mpf(fr.numerator) / mp.mpf(fr.denominator)

    @staticmethod
    def to_float(x):
        return float(x)


def hi_solve(net, window, rhs, dirichlet_zero=(), pin=None, field=None):
    """Solve the window Laplacian system in the requested scalar field.

    Parameters
    ----------
    net : Network
    window : SubgraphView
        Edges with both endpoints inside define the operator (free semantics);
        vertices listed in ``dirichlet_zero`` are held at 0 and excluded from
        the unknowns (wired semantics); ``pin`` fixes one vertex at 0 for the
        otherwise-singular free system.
    rhs : dict vertex -> number
    field : FractionField or MPField; mp precision must be set by the caller.

    Returns a dict vertex -> field value covering the window.
    """
    zero = field.zero
    drop = set(int(v) for v in dirichlet_zero)
    unknown = [int(v) for v in window.vertices if v not in drop and v != pin]
    lvl = net.level
    unknown.sort(key=lambda v: (lvl[v], v), reverse=True)
    pos = {v: i for i, v in enumerate(unknown)}
    n = len(unknown)

    emask = window.edge_mask
    eidx = np.flatnonzero(emask)
    exact_c = {int(k): field.conv(net.exact_conductance(int(k))) for k in eidx}
    incident = {v: [] for v in unknown}
    inside = window.mask
    for k in eidx:
        a, b = int(net.ei[k]), int(net.ej[k])
        if a in pos:
            incident[a].append((b, exact_c[int(k)]))
        if b in pos:
            incident[b].append((a, exact_c[int(k)]))

    A = []
    bvec = []
    for v in unknown:
        row = {}
        tot = zero
        for w, c in incident[v]:
            if not inside[w]:
                continue
            tot = tot + c
            j = pos.get(w)
            if j is not None:
                row[j] = row.get(j, zero) - c
        row[pos[v]] = tot
        A.append(row)
        val = rhs.get(v, 0)
        bvec.append(field.conv(Fraction(val)) if val else zero)

    for col in range(n):
        piv = A[col].get(col, zero)
        if piv == 0:
            raise SingularSystem("zero pivot; window may be disconnected")
        for r in range(col + 1, n):
            f = A[r].get(col)
            if not f:
                continue
            f = f / piv
            for c2, val in A[col].items():
                if c2 > col:
                    A[r][c2] = A[r].get(c2, zero) - f * val
            A[r].pop(col, None)
            bvec[r] = bvec[r] - f * bvec[col]

    x = [zero] * n
    for r in range(n - 1, -1, -1):
        s = bvec[r]
        for c2, val in A[r].items():
            if c2 > r:
                s = s - val * x[c2]
        x[r] = s / A[r][r]

    sol = {v: x[pos[v]] for v in unknown}
    for v in drop:
        if window.mask[v]:
            sol[v] = zero
    if pin is not None:
        sol[pin] = zero
    return sol


def hi_energy(net, window, hu, hv, field):
    """Energy inner product of two hi-value dicts over the window's edges."""
    acc = field.zero
    for k in np.flatnonzero(window.edge_mask):
        a, b = int(net.ei[k]), int(net.ej[k])
        c = field.conv(net.exact_conductance(int(k)))
        acc = acc + c * (hu[a] - hu[b]) * (hv[a] - hv[b])
    return acc
