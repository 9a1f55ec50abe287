"""Recompute the frozen r0* regression constants with the fixed-step oracle only.

Bisects on the oracle's own exit classification (S^{2n}) or on the oracle's
alpha - beta at the wall (S^{3n-1}), starting from a bracket of half-width
1e-4 around a supplied guess.  Run:  python3 tools/freeze_r0_star.py
"""

from __future__ import annotations

import math

from cmcshoot.dynamics import Params
from cmcshoot.geometry import Family, beta
from cmcshoot.oracle import OracleConfig, oracle_shot

CASES = [
    (Family.s2n(2), 1.0, 1.2160900750),
    (Family.s2n(3), 1.0, 1.2917868112),
    (Family.s2n(2), 5.0, 1.3946534369),
    (Family.s3n(2), 1.0, 0.6538766168),
    (Family.s3n(2), 3.0, 0.7347715780),
]
CFG = OracleConfig(step=1e-6)


def score(params, r0) -> float:
    """Negative on the small-r0 side of the target, positive beyond it."""
    ref = oracle_shot(params, r0, CFG)
    if params.family.is_s2n:
        return -1.0 if ref.event == "alpha" else 1.0
    if ref.event == "alpha":
        return -math.inf
    r, th, al = ref.y_end
    return -(al - beta(r, th))


def freeze(params, guess, half=1e-4, tol=1e-11):
    lo, hi = guess - half, guess + half
    assert score(params, lo) < 0 < score(params, hi), "bracket does not straddle r0*"
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if score(params, mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


if __name__ == "__main__":
    for fam, lam, guess in CASES:
        r0 = freeze(Params(fam, lam), guess)
        print(f"({fam.kind.value!r}, {fam.n}, {lam!r}): {r0!r},")
