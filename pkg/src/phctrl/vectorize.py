"""Flat real-coordinate form of a system triple.

A skew-adjoint J is determined by its strict upper triangle (plus, over
the complexes, the imaginary parts of its diagonal), a self-adjoint H by
its upper triangle, and B is free, so the triple lives in a real vector
space of dimension n(n-1)/2 + n(n+1)/2 + nm = n^2 + nm over the reals.
Packing lists those coordinates in a fixed order, making the conversion
an exact bijection:

real field (length n^2 + nm):
  1. strict upper triangle of J, row-major
  2. upper triangle of H including the diagonal, row-major
  3. B, column-major

complex field (length 2 n^2 + 2 nm, coordinates still real):
  same traversal, but each off-diagonal entry contributes (re, im), the
  J diagonal contributes only its imaginary part (the real part is
  structurally zero), the H diagonal only its real part, and each B
  entry contributes (re, im).  These are exactly the real degrees of
  freedom of the triple, so no slot is redundant.

Packing and unpacking copy entries (negating or conjugating where the
symmetry demands), so the roundtrip is exact entry for entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Dims, PHSystem, PHTSystem, ScalarField
from .errors import DimensionMismatch, LengthMismatch


def packed_length(dims: Dims, field: ScalarField) -> int:
    """Number of real coordinates of a packed system."""
    n, m = dims.n, dims.m
    if field is ScalarField.REAL:
        return n * n + n * m
    return 2 * n * n + 2 * n * m


@dataclass(frozen=True, eq=False)
class PackedVector:
    """Real coordinates of a system under the packing isomorphism."""

    coords: np.ndarray
    dims: Dims
    field: ScalarField

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 1:
            raise DimensionMismatch(f"coords must be 1-d, got {coords.ndim}-d")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PackedVector):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.field == other.field
            and np.array_equal(self.coords, other.coords)
        )


def pack(sys: PHTSystem | PHSystem) -> PackedVector:
    """Coordinates of a system, in the fixed order documented above."""
    base = sys.base if isinstance(sys, PHSystem) else sys
    n, m = base.dims.n, base.dims.m
    J, H, B = base.J, base.H, base.B
    if base.field is ScalarField.REAL:
        coords = np.concatenate([
            J[np.triu_indices(n, k=1)],
            H[np.triu_indices(n)],
            B.T.ravel(),
        ])
        return PackedVector(coords, base.dims, base.field)

    out = np.empty(packed_length(base.dims, base.field), dtype=np.float64)
    pos = 0
    for i in range(n):
        out[pos] = J[i, i].imag
        pos += 1
        for j in range(i + 1, n):
            out[pos] = J[i, j].real
            out[pos + 1] = J[i, j].imag
            pos += 2
    for i in range(n):
        out[pos] = H[i, i].real
        pos += 1
        for j in range(i + 1, n):
            out[pos] = H[i, j].real
            out[pos + 1] = H[i, j].imag
            pos += 2
    for j in range(m):
        for i in range(n):
            out[pos] = B[i, j].real
            out[pos + 1] = B[i, j].imag
            pos += 2
    return PackedVector(out, base.dims, base.field)


def unpack(v: PackedVector) -> PHTSystem:
    """Inverse of :func:`pack`; exact on every valid coordinate vector."""
    n, m = v.dims.n, v.dims.m
    expected = packed_length(v.dims, v.field)
    if len(v) != expected:
        raise LengthMismatch(expected, len(v))
    c = v.coords

    if v.field is ScalarField.REAL:
        nj = n * (n - 1) // 2
        nh = n * (n + 1) // 2
        upper = np.zeros((n, n))
        upper[np.triu_indices(n, k=1)] = c[:nj]
        J = upper - upper.T
        Hu = np.zeros((n, n))
        Hu[np.triu_indices(n)] = c[nj:nj + nh]
        H = Hu + np.triu(Hu, k=1).T
        B = c[nj + nh:].reshape(m, n).T
        return PHTSystem(v.dims, v.field, J, H, B)

    J = np.zeros((n, n), dtype=np.complex128)
    H = np.zeros((n, n), dtype=np.complex128)
    B = np.zeros((n, m), dtype=np.complex128)
    pos = 0
    for i in range(n):
        J[i, i] = 1j * c[pos]
        pos += 1
        for j in range(i + 1, n):
            J[i, j] = c[pos] + 1j * c[pos + 1]
            J[j, i] = -c[pos] + 1j * c[pos + 1]
            pos += 2
    for i in range(n):
        H[i, i] = c[pos]
        pos += 1
        for j in range(i + 1, n):
            H[i, j] = c[pos] + 1j * c[pos + 1]
            H[j, i] = c[pos] - 1j * c[pos + 1]
            pos += 2
    for j in range(m):
        for i in range(n):
            B[i, j] = c[pos] + 1j * c[pos + 1]
            pos += 2
    return PHTSystem(v.dims, v.field, J, H, B)


def packed_to_dict(v: PackedVector) -> dict:
    return {
        "n": v.dims.n,
        "m": v.dims.m,
        "field": v.field.value,
        "coords": [float(x) for x in v.coords],
    }


def packed_from_dict(data: dict) -> PackedVector:
    try:
        dims = Dims(int(data["n"]), int(data["m"]))
        field = ScalarField(data["field"])
        coords = np.asarray(data["coords"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as e:
        raise DimensionMismatch(f"malformed packed vector object: {e}")
    return PackedVector(coords, dims, field)


def dumps_packed(v: PackedVector, indent: int | None = None) -> str:
    return json.dumps(packed_to_dict(v), indent=indent)


def loads_packed(text: str | bytes) -> PackedVector:
    return packed_from_dict(json.loads(text))
