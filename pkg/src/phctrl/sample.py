"""Random generation of structured systems.

Entries are Gaussian and symmetrized by the same projections the core
types enforce, so every draw has exactly the required structure and the
packed coordinates carry a jointly continuous density.

Reproducibility: draws are made from splittable streams.  A master
64-bit seed plus integer indices feed numpy's SeedSequence, so element
i of a batch is bitwise reproducible regardless of batch size or
scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Union

import numpy as np

from .core import (
    Dims,
    PHSystem,
    PHTSystem,
    ScalarField,
    validate_ph,
)
from .errors import DegenerateDraw, NotPositiveDefinite, PerturbationFailed

MAX_PD_RETRIES = 5


def stream(seed: int, *indices: int) -> np.random.Generator:
    """Deterministic generator for a (seed, index...) tuple."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, *indices))))


@dataclass(frozen=True)
class Wishart:
    """H = A A*/p with A Gaussian n x p; almost surely positive definite
    and absolutely continuous on the cone for p >= n.  p = None means p = n."""

    p: int | None = None


@dataclass(frozen=True)
class ShiftedGram:
    """H = A A* + eps I with A Gaussian n x n; eps is a hard spectral floor."""

    eps: float = 1.0


HLaw = Union[Wishart, ShiftedGram]


@dataclass(frozen=True)
class SamplerSpec:
    """Parameters of the Gaussian system sampler."""

    dims: Dims
    field: ScalarField = ScalarField.REAL
    j_scale: float = 1.0
    h_law: HLaw = dataclass_field(default_factory=Wishart)
    b_scale: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.j_scale <= 0 or self.b_scale <= 0:
            raise ValueError("j_scale and b_scale must be positive")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        law = self.h_law
        if isinstance(law, Wishart):
            if law.p is not None and law.p < self.dims.n:
                raise ValueError(f"Wishart p must be >= n = {self.dims.n}, got {law.p}")
        elif isinstance(law, ShiftedGram):
            if law.eps <= 0:
                raise ValueError(f"ShiftedGram eps must be positive, got {law.eps}")
        else:
            raise ValueError(f"unknown H law: {law!r}")


@dataclass(frozen=True)
class PerturbationSpec:
    """Step size and direction law for structure-preserving perturbations.

    The direction is drawn from the same Gaussian family as the sampler
    (per-part scales shape its relative weights) and normalized to unit
    joint Frobenius norm before stepping.
    """

    epsilon: float
    j_scale: float = 1.0
    h_scale: float = 1.0
    b_scale: float = 1.0
    max_retries: int = 40

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if min(self.j_scale, self.h_scale, self.b_scale) <= 0:
            raise ValueError("direction scales must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be nonnegative")


@dataclass(frozen=True)
class PerturbResult:
    """Outcome of a perturbation: the system plus the step actually taken."""

    system: PHSystem
    eps_requested: float
    eps_used: float
    halvings: int


def _gauss(rng: np.random.Generator, shape, field: ScalarField) -> np.ndarray:
    if field is ScalarField.COMPLEX:
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return rng.standard_normal(shape)


def _skew_part(G: np.ndarray) -> np.ndarray:
    return (G - G.conj().T) / 2.0


def _sym_part(G: np.ndarray) -> np.ndarray:
    return (G + G.conj().T) / 2.0


def sample_pht(spec: SamplerSpec, rng: np.random.Generator) -> PHTSystem:
    """Gaussian draw on the ambient space of structured triples.

    Draw order (part of the determinism contract): J source, H source, B.
    """
    n, m = spec.dims.n, spec.dims.m
    J = spec.j_scale * _skew_part(_gauss(rng, (n, n), spec.field))
    H = _sym_part(_gauss(rng, (n, n), spec.field))
    B = spec.b_scale * _gauss(rng, (n, m), spec.field)
    return PHTSystem(spec.dims, spec.field, J, H, B)


def _draw_h(spec: SamplerSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    law = spec.h_law
    if isinstance(law, Wishart):
        p = law.p if law.p is not None else n
        A = _gauss(rng, (n, p), spec.field)
        return (A @ A.conj().T) / p
    A = _gauss(rng, (n, n), spec.field)
    return A @ A.conj().T + law.eps * np.eye(n)


def sample_ph(spec: SamplerSpec, rng: np.random.Generator) -> PHSystem:
    """As :func:`sample_pht`, but H is drawn on the positive definite cone.

    The positive definiteness certificate can only fail on numerically
    degenerate draws; after MAX_PD_RETRIES fresh attempts the failure is
    reported as DegenerateDraw, which signals a sampler or parameter bug
    rather than bad luck.
    """
    n, m = spec.dims.n, spec.dims.m
    J = spec.j_scale * _skew_part(_gauss(rng, (n, n), spec.field))
    last: NotPositiveDefinite | None = None
    for _ in range(MAX_PD_RETRIES):
        H = _draw_h(spec, rng, n)
        B = spec.b_scale * _gauss(rng, (n, m), spec.field)
        sys = PHTSystem(spec.dims, spec.field, J, H, B)
        try:
            return validate_ph(sys)
        except NotPositiveDefinite as e:
            last = e
    raise DegenerateDraw(MAX_PD_RETRIES, last.smallest_eigenvalue)


def sample_uncontrollable(dims: Dims, k: int, rng: np.random.Generator,
                          field: ScalarField = ScalarField.REAL,
                          j_scale: float = 1.0,
                          b_scale: float = 1.0) -> PHSystem:
    """Negative control: the trailing k states are unreachable.

    J and H are block diagonal (blocks of sizes n-k and k) and the last
    k rows of B vanish, so the reachable subspace stays inside the first
    n-k coordinates and the reachability rank is at most n - k.  H blocks
    follow the Wishart law with p equal to the block size.
    """
    n, m = dims.n, dims.m
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n = {n}, got {k}")
    n1 = n - k
    dtype = field.dtype
    J = np.zeros((n, n), dtype=dtype)
    for lo, hi in ((0, n1), (n1, n)):
        size = hi - lo
        J[lo:hi, lo:hi] = j_scale * _skew_part(_gauss(rng, (size, size), field))

    last: NotPositiveDefinite | None = None
    for _ in range(MAX_PD_RETRIES):
        H = np.zeros((n, n), dtype=dtype)
        for lo, hi in ((0, n1), (n1, n)):
            size = hi - lo
            A = _gauss(rng, (size, size), field)
            H[lo:hi, lo:hi] = (A @ A.conj().T) / size
        B = np.zeros((n, m), dtype=dtype)
        B[:n1, :] = b_scale * _gauss(rng, (n1, m), field)
        sys = PHTSystem(dims, field, J, H, B)
        try:
            return validate_ph(sys)
        except NotPositiveDefinite as e:
            last = e
    raise DegenerateDraw(MAX_PD_RETRIES, last.smallest_eigenvalue)


def perturb(sys: PHSystem, spec: PerturbationSpec,
            rng: np.random.Generator) -> PerturbResult:
    """Step by epsilon along a random unit-Frobenius structured direction.

    If the step leaves the positive definite cone, it is halved (same
    direction) until validation succeeds; openness of the cone makes
    this terminate for any base system.  epsilon = 0 returns the base
    system unchanged without consuming randomness.
    """
    if spec.epsilon == 0.0:
        return PerturbResult(system=sys, eps_requested=0.0, eps_used=0.0, halvings=0)

    n, m = sys.dims.n, sys.dims.m
    field = sys.field
    DJ = spec.j_scale * _skew_part(_gauss(rng, (n, n), field))
    DH = spec.h_scale * _sym_part(_gauss(rng, (n, n), field))
    DB = spec.b_scale * _gauss(rng, (n, m), field)
    norm = math.sqrt(
        np.linalg.norm(DJ) ** 2 + np.linalg.norm(DH) ** 2 + np.linalg.norm(DB) ** 2
    )
    if norm == 0.0:
        norm = 1.0
    DJ /= norm
    DH /= norm
    DB /= norm

    eps = spec.epsilon
    for halvings in range(spec.max_retries + 1):
        candidate = PHTSystem(
            sys.dims, field, sys.J + eps * DJ, sys.H + eps * DH, sys.B + eps * DB
        )
        try:
            return PerturbResult(
                system=validate_ph(candidate),
                eps_requested=spec.epsilon,
                eps_used=eps,
                halvings=halvings,
            )
        except NotPositiveDefinite:
            eps /= 2.0
    raise PerturbationFailed(spec.epsilon, spec.max_retries)
