"""Primal/dual vectors on R^d, the canonical pairing, and the error types
shared by every other module.

The primal space and its dual are both R^d, but points and dual points are
kept as distinct types so that kernel gradients, operator values and
resolvent targets are never silently mixed with primal iterates.  Numeric
internals operate on plain float arrays; ``Vector``/``DualVector`` are the
validated values handed across module boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "BregfbError",
    "ContractError",
    "DomainViolation",
    "SamplingError",
    "UnsupportedPair",
    "RangeFailure",
    "ConvergenceFailure",
    "Vector",
    "DualVector",
    "as_array",
    "pair",
    "norm_p",
    "vector_to_json",
    "vector_from_json",
    "csv_header",
]


class BregfbError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(BregfbError, ValueError):
    """A documented precondition was violated by the caller."""


class DomainViolation(BregfbError):
    """A point left the interior of a kernel domain (or the domain of B)."""


class SamplingError(BregfbError):
    """A sampler could not produce admissible points."""


class UnsupportedPair(BregfbError):
    """No resolvent dispatch path exists for a (kernel, operator) pair."""


class RangeFailure(UnsupportedPair):
    """The resolvent target lies outside ran(grad f + gamma A)."""


class ConvergenceFailure(BregfbError):
    """An inner solver exhausted its iteration budget.

    Carries the best iterate found and its residual.
    """

    def __init__(self, message, best=None, residual=float("nan")):
        super().__init__(message)
        self.best = best
        self.residual = residual


ArrayLike = Union[Sequence[float], np.ndarray, "Vector", "DualVector"]


def as_array(x, dim=None, name="x"):
    """Return ``x`` as a 1-d float array, checking finiteness and dimension."""
    if isinstance(x, (Vector, DualVector)):
        arr = x.coords
    else:
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise ContractError(f"{name} must be a non-empty 1-d array, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise ContractError(f"{name} has dimension {arr.size}, expected {dim}")
    return arr


def _frozen(coords, name):
    arr = np.array(as_array(coords, name=name), dtype=float, copy=True)
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} has non-finite coordinates")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Vector:
    """A point of the primal space R^d (immutable, finite coordinates)."""

    coords: np.ndarray

    def __init__(self, coords: ArrayLike):
        object.__setattr__(self, "coords", _frozen(coords, "Vector"))

    @property
    def dim(self) -> int:
        return self.coords.size

    def __len__(self):
        return self.coords.size

    def __iter__(self):
        return iter(self.coords.tolist())

    def __getitem__(self, k):
        return self.coords[k]

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Vector):
            return NotImplemented
        return self.coords.shape == other.coords.shape and bool(np.all(self.coords == other.coords))

    def __hash__(self):
        return hash(("Vector", self.coords.tobytes()))

    def __add__(self, other):
        if isinstance(other, DualVector):
            raise ContractError("cannot add a DualVector to a Vector")
        return Vector(self.coords + as_array(other, self.dim))

    def __sub__(self, other):
        if isinstance(other, DualVector):
            raise ContractError("cannot subtract a DualVector from a Vector")
        return Vector(self.coords - as_array(other, self.dim))

    def __mul__(self, scalar):
        return Vector(float(scalar) * self.coords)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Vector({self.coords.tolist()!r})"


@dataclass(frozen=True, eq=False)
class DualVector:
    """A point of the dual space (R^d)^*, paired with ``Vector`` by ``pair``."""

    coords: np.ndarray

    def __init__(self, coords: ArrayLike):
        object.__setattr__(self, "coords", _frozen(coords, "DualVector"))

    @property
    def dim(self) -> int:
        return self.coords.size

    def __len__(self):
        return self.coords.size

    def __iter__(self):
        return iter(self.coords.tolist())

    def __getitem__(self, k):
        return self.coords[k]

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, DualVector):
            return NotImplemented
        return self.coords.shape == other.coords.shape and bool(np.all(self.coords == other.coords))

    def __hash__(self):
        return hash(("DualVector", self.coords.tobytes()))

    def __add__(self, other):
        if isinstance(other, Vector):
            raise ContractError("cannot add a Vector to a DualVector")
        return DualVector(self.coords + as_array(other, self.dim))

    def __sub__(self, other):
        if isinstance(other, Vector):
            raise ContractError("cannot subtract a Vector from a DualVector")
        return DualVector(self.coords - as_array(other, self.dim))

    def __mul__(self, scalar):
        return DualVector(float(scalar) * self.coords)

    __rmul__ = __mul__

    def __repr__(self):
        return f"DualVector({self.coords.tolist()!r})"


def pair(xstar: ArrayLike, x: ArrayLike) -> float:
    """Canonical pairing <x, x*> = sum_k x*_k x_k.

    Raises
    ------
    ContractError
        If the dimensions differ.
    """
    a = as_array(xstar, name="xstar")
    b = as_array(x, name="x")
    if a.size != b.size:
        raise ContractError(f"pairing of dimension {a.size} with dimension {b.size}")
    return float(np.dot(a, b))


def norm_p(x: ArrayLike, p: Union[float, str] = 2.0) -> float:
    """The l^p norm of ``x``; ``p="inf"`` gives the max norm."""
    arr = np.abs(as_array(x))
    if isinstance(p, str):
        if p.lower() not in ("inf", "infinity"):
            raise ContractError(f"unknown norm order {p!r}")
        return float(arr.max())
    p = float(p)
    if math.isinf(p) and p > 0:
        return float(arr.max())
    if not p >= 1.0:
        raise ContractError(f"norm order must be >= 1, got {p}")
    if p == 1.0:
        return float(arr.sum())
    if p == 2.0:
        return float(np.sqrt(np.dot(arr, arr)))
    scale = arr.max()
    if scale == 0.0:
        return 0.0
    # scaled to avoid overflow for large p
    return float(scale * np.sum((arr / scale) ** p) ** (1.0 / p))


def vector_to_json(x: ArrayLike) -> list:
    return [float(v) for v in as_array(x)]


def vector_from_json(data: Iterable[float], dual: bool = False):
    return DualVector(list(data)) if dual else Vector(list(data))


def csv_header(dim: int, prefix: str = "x") -> list:
    return [f"{prefix}{k}" for k in range(dim)]
