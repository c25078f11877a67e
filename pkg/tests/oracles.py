"""Naive reference implementations used as independent oracles.

Everything here is written with plain Python loops and math.comb, so the
vectorized code in the package is checked against a second, dissimilar
route to the same numbers.
"""

import math


def naive_mix(b, xi):
    """Mixture law by direct evaluation: p(m) = xi*b(m-1) + (1-xi)*b(m)."""
    b = [float(v) for v in b]
    out = []
    for m in range(len(b) + 1):
        below = b[m - 1] if 1 <= m <= len(b) else 0.0
        here = b[m] if m < len(b) else 0.0
        out.append(xi * below + (1.0 - xi) * here)
    return out


def naive_thin(p, q):
    """Click law by double-loop enumeration of the binomial survival sum."""
    p = [float(v) for v in p]
    out = []
    for k in range(len(p)):
        total = 0.0
        for m in range(k, len(p)):
            total += math.comb(m, k) * q**k * (1.0 - q) ** (m - k) * p[m]
        out.append(total)
    return out


def naive_forward(b, xi, tau, etas):
    """Exact per-setting click laws, mixed then thinned, from first principles."""
    mixed = naive_mix(b, xi)
    return [naive_thin(mixed, tau * float(eta)) for eta in etas]


def naive_mean(p):
    return sum(m * float(v) for m, v in enumerate(p))


def naive_penalty(b):
    """Sum of squared second differences over the interior of b."""
    b = [float(v) for v in b]
    return sum((b[m + 1] - 2.0 * b[m] + b[m - 1]) ** 2 for m in range(1, len(b) - 1))


def naive_objective(b, tau, etas, rows, xi, lam):
    """Least-squares misfit plus the smoothness term, from first principles.

    Matches the solver's convention: frequency rows are zero-padded to the
    largest click number present, and the model is evaluated on exactly
    that click grid.
    """
    kmax = max(len(row) for row in rows) - 1
    mixed = naive_mix(b, xi)
    total = 0.0
    for eta, row in zip(etas, rows):
        q = tau * float(eta)
        for k in range(kmax + 1):
            model = sum(
                math.comb(m, k) * q**k * (1.0 - q) ** (m - k) * mixed[m]
                for m in range(k, len(mixed))
            )
            data = float(row[k]) if k < len(row) else 0.0
            total += (model - data) ** 2
    return total + lam * naive_penalty(b)
