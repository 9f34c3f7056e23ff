# Shared exact-arithmetic fixtures: small hand-built score subspace
# collections with known intersection geometry, used by the core tests and
# the acceptance suite.

import numpy as np

from psidecomp import OrthonormalBasis

S2 = 1.0 / np.sqrt(2.0)


def independent_bases():
    """K=3, n=4; shared e1, otherwise in general position (unique ranks)."""
    V1 = np.array([[1, 0], [0, 1], [0, 0], [0, 0]], dtype=float)
    V2 = np.array([[1, 0], [0, S2], [0, S2], [0, 0]], dtype=float)
    V3 = np.array([[1, 0], [0, 0], [0, S2], [0, S2]], dtype=float)
    return [OrthonormalBasis(V) for V in (V1, V2, V3)]


def dependent_bases():
    """K=3, n=4; like independent_bases but V3 widened so the deflated
    singleton subspaces become linearly dependent."""
    V1 = np.array([[1, 0], [0, 1], [0, 0], [0, 0]], dtype=float)
    V2 = np.array([[1, 0], [0, S2], [0, S2], [0, 0]], dtype=float)
    V3 = np.array([[1, 0, 0], [0, 0, 0], [0, 1, S2], [0, 0, S2]], dtype=float)
    return [OrthonormalBasis(V) for V in (V1, V2, V3)]


def absolutely_orthogonal_bases():
    """K=4, n=6; pair {3,4} shares one direction, everything orthogonal."""
    V1 = np.array([[0, 0, 1, 0, 0, 0]], dtype=float).T
    V2 = np.array([[0, 0, 0, 1, 0, 0]], dtype=float).T
    V3 = np.array([[S2, S2, 0, 0, 0, 0], [0, 0, 0, 0, 1, 0]], dtype=float).T
    V4 = np.array([[S2, S2, 0, 0, 0, 0], [0, 0, 0, 0, 0, 1]], dtype=float).T
    return [OrthonormalBasis(V) for V in (V1, V2, V3, V4)]


def non_absolutely_orthogonal_bases():
    """K=4, n=6; blocks 1 and 2 lean into the shared {3,4} direction."""
    a = 1.0 / (2.0 * np.sqrt(2.0))
    b = np.sqrt(3.0) / (2.0 * np.sqrt(2.0))
    V1 = np.array([[a, b, S2, 0, 0, 0]], dtype=float).T
    V2 = np.array([[b, a, 0, S2, 0, 0]], dtype=float).T
    V3 = np.array([[S2, S2, 0, 0, 0, 0], [0, 0, 0, 0, 1, 0]], dtype=float).T
    V4 = np.array([[S2, S2, 0, 0, 0, 0], [0, 0, 0, 0, 0, 1]], dtype=float).T
    return [OrthonormalBasis(V) for V in (V1, V2, V3, V4)]


def random_basis(rng, n, r):
    from psidecomp import orthonormalize
    return orthonormalize(rng.standard_normal((n, r)), 1e-12)
