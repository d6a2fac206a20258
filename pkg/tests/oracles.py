"""Independent brute-force oracles used to pin expected values.

These are deliberately written against the definitions, not against the
library's evaluation routes: the power-form oracle expands the wedge product
as a sum over all permutations with the parity computed by inversion
counting.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def permutation_parity(perm) -> int:
    """+1 or -1 by counting inversions."""
    inversions = 0
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                inversions += 1
    return -1 if inversions % 2 else 1


def wedge_power_value(w: np.ndarray, vectors, p: int) -> float:
    """(1/p!) omega^p evaluated on 2p vectors by full permutation expansion.

    omega^p(v_1, ..., v_2p) = (1/2^p) sum_sigma sgn(sigma)
        prod_k omega(v_{sigma(2k)}, v_{sigma(2k+1)}).
    """
    vectors = [np.asarray(v, dtype=float) for v in vectors]
    k = 2 * p
    assert len(vectors) == k
    pair = [[float(vi @ w @ vj) for vj in vectors] for vi in vectors]
    total = 0.0
    for perm in itertools.permutations(range(k)):
        product = 1.0
        for block in range(p):
            product *= pair[perm[2 * block]][perm[2 * block + 1]]
        total += permutation_parity(perm) * product
    return total / (math.factorial(p) * 2**p)
