"""Controllability certificates for (J H, B) pairs.

Three routes to the same verdict, with very different conditioning:

* reachability (Kalman) matrix rank via singular values: the workhorse,
  but the matrix [B, (JH)B, ..., (JH)^{n-1}B] squares up condition
  numbers block by block and becomes numerically rank deficient for
  moderate n even on exactly controllable systems;
* all order-n minors of that matrix: exponential in count, intended as
  a small-instance oracle only;
* the eigenvector (PBH) test on the pencil [JH - lam I, B]: an absolute
  margin per eigenvalue, well conditioned, kept as the second
  certificate precisely because the first one saturates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import AnySystem, Dims, PHSystem, PHTSystem, ScalarField, system_matrix, validate_ph
from .errors import CombinatorialBlowup, EigenFailure, SvdFailure

DEFAULT_MINOR_CAP = 200_000
DEFAULT_MINOR_REL_TOL = 1e-10
DEFAULT_PBH_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class KalmanMatrix:
    """Reachability matrix [B, (JH)B, ..., (JH)^{n-1}B], shape n x nm."""

    K: np.ndarray
    dims: Dims


@dataclass(frozen=True)
class RankReport:
    """Numerical rank evidence: singular values, the tolerance actually
    used, and the resulting verdict."""

    rank: int
    singular_values: tuple[float, ...]
    tol_used: float
    controllable: bool


@dataclass(frozen=True, eq=False)
class MinorSet:
    """All order-n minors of a reachability matrix, in lexicographic
    order of the chosen column subsets."""

    values: np.ndarray
    q: int
    dims: Dims
    spectral_norm: float

    def controllable(self, rel_tol: float = DEFAULT_MINOR_REL_TOL) -> bool:
        """Some minor resolvably nonzero.

        The tolerance scales with ||K||_2^n to match the degree-n
        homogeneity of determinants; with rel_tol = 0 this is the exact
        criterion |minor| > 0.
        """
        tol = rel_tol * self.spectral_norm ** self.dims.n
        return bool(np.any(np.abs(self.values) > tol))


def kalman_matrix(sys: AnySystem) -> KalmanMatrix:
    """Build the reachability matrix by repeated multiplication.

    Block j is (JH) times block j-1; powers of JH are never formed
    explicitly.
    """
    n, m = sys.dims.n, sys.dims.m
    A = system_matrix(sys)
    K = np.empty((n, n * m), dtype=sys.field.dtype)
    block = np.array(sys.B)
    K[:, :m] = block
    for j in range(1, n):
        block = A @ block
        K[:, j * m:(j + 1) * m] = block
    K.setflags(write=False)
    return KalmanMatrix(K, sys.dims)


def rank_svd(kal: KalmanMatrix, rel_tol: float | None = None) -> RankReport:
    """Numerical rank of the reachability matrix from its singular values.

    rank counts singular values strictly above tol_used = rel_tol * sigma_max,
    with rel_tol defaulting to eps * max(n, nm); an absolute floor of 1e-300
    applies when sigma_max = 0.  Controllable means rank = n.
    """
    n, m = kal.dims.n, kal.dims.m
    if rel_tol is None:
        rel_tol = float(np.finfo(np.float64).eps) * max(n, n * m)
    if rel_tol <= 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol}")
    try:
        sv = np.linalg.svd(kal.K, compute_uv=False)
    except np.linalg.LinAlgError as e:
        raise SvdFailure(f"SVD of the reachability matrix failed: {e}") from e
    sigma_max = float(sv[0]) if sv.size else 0.0
    tol_used = rel_tol * sigma_max if sigma_max > 0.0 else 1e-300
    rank = int(np.count_nonzero(sv > tol_used))
    return RankReport(
        rank=rank,
        singular_values=tuple(float(s) for s in sv),
        tol_used=float(tol_used),
        controllable=(rank == n),
    )


def minors_order_n(kal: KalmanMatrix, cap: int = DEFAULT_MINOR_CAP) -> MinorSet:
    """All order-n minors of the reachability matrix.

    Column subsets are enumerated in lexicographic order and each
    determinant is computed by LU with partial pivoting.  The count
    q = C(nm, n) grows combinatorially, so enumeration refuses beyond
    the cap.
    """
    n, m = kal.dims.n, kal.dims.m
    q = math.comb(n * m, n)
    if q > cap:
        raise CombinatorialBlowup(q, cap)
    K = kal.K
    values = np.array(
        [np.linalg.det(K[:, list(cols)]) for cols in itertools.combinations(range(n * m), n)],
        dtype=K.dtype,
    )
    spectral_norm = float(np.linalg.norm(K, 2))
    return MinorSet(values=values, q=q, dims=kal.dims, spectral_norm=spectral_norm)


def pbh_check(sys: AnySystem, tol: float = DEFAULT_PBH_TOL) -> bool:
    """Eigenvector test: every eigenvalue of JH must be reachable.

    True iff sigma_min([JH - lam I, B]) > tol * (||JH||_2 + ||B||_2) for
    every eigenvalue lam.  The default tol sits far above eigensolver
    forward error and far below the margins of generic systems.
    """
    A = system_matrix(sys)
    B = sys.B
    n = sys.dims.n
    try:
        lams = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as e:
        raise EigenFailure(f"eigenvalue computation failed: {e}") from e
    scale = float(np.linalg.norm(A, 2) + np.linalg.norm(B, 2))
    threshold = tol * scale
    eye = np.eye(n)
    for lam in lams:
        pencil = np.hstack([A - lam * eye, B])
        try:
            smin = float(np.linalg.svd(pencil, compute_uv=False)[-1])
        except np.linalg.LinAlgError as e:
            raise SvdFailure(f"SVD of the PBH pencil failed: {e}") from e
        if not smin > threshold:
            return False
    return True


def canonical_witness(n: int, m: int) -> PHSystem:
    """Explicitly controllable system: skew shift J, H = I, B = [e1, 0].

    J carries +1 on the subdiagonal and -1 on the superdiagonal (J = 0
    for n = 1).  The Krylov vectors J^j e1 then run through a triangular
    basis, so the reachability matrix has full row rank for every
    n >= 1, m >= 1.
    """
    dims = Dims(n, m)
    J = np.zeros((n, n))
    idx = np.arange(n - 1)
    J[idx + 1, idx] = 1.0
    J[idx, idx + 1] = -1.0
    H = np.eye(n)
    B = np.zeros((n, m))
    B[0, 0] = 1.0
    return validate_ph(PHTSystem(dims, ScalarField.REAL, J, H, B))
