"""Finite-dimensional Hilbert space core.

State vectors, operators (dense or diagonal in a fixed unitary frame),
orthonormal bases, tensor products and spectral decomposition.

Tensor products use one convention everywhere: the left factor is the slow
index, so ``tensor_state(a, b)[i * b.dim + j] == a[i] * b[j]``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimMismatch, NotOrthonormal, NotSelfAdjoint, TooLarge

DENSE_CAP = 4096
ALGEBRAIC_TOL = 1e-12
SPECTRAL_TOL = 1e-10
CLUSTER_TOL = 1e-9

DENSE = "dense"
POSITION_DIAGONAL = "position-diagonal"
MOMENTUM_DIAGONAL = "momentum-diagonal"


def _frozen(array, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen(np.ravel(self.amplitudes)))

    @classmethod
    def basis_vector(cls, dim: int, index: int) -> "StateVector":
        e = np.zeros(dim, dtype=complex)
        e[index] = 1.0
        return cls(e)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def __len__(self):
        return self.dim

    def __getitem__(self, i):
        return self.amplitudes[i]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        """Return the unit vector along ``self``.

        Vectors already normalized to within a few ulps are returned as is, which
        makes ``normalize`` exactly idempotent.
        """
        n = self.norm()
        if n == 0.0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        if abs(n - 1.0) <= 4 * np.finfo(float).eps:
            return self
        return StateVector(self.amplitudes / n)

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``, antilinear in the first slot."""
        _check_dims(self.dim, other.dim)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def distance(self, other: "StateVector") -> float:
        _check_dims(self.dim, other.dim)
        return float(np.linalg.norm(self.amplitudes - other.amplitudes))


def _check_dims(a: int, b: int):
    if a != b:
        raise DimMismatch(f"dimension mismatch: {a} != {b}")


def _apply_axes(array: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Apply ``mats[i]`` along axis ``i`` of ``array``."""
    out = array
    for axis, m in enumerate(mats):
        out = np.moveaxis(np.tensordot(m, out, axes=(1, axis)), 0, axis)
    return out


@dataclass(frozen=True)
class Eigenspace:
    """One eigenvalue of an operator together with a way to project onto it.

    Dense operators carry an orthonormal ``basis`` (columns); diagonal forms
    carry a boolean ``mask`` over the frame in which they are diagonal.
    """

    value: float
    basis: np.ndarray | None = None
    mask: np.ndarray | None = None
    transforms: tuple = ()

    @property
    def multiplicity(self) -> int:
        if self.basis is not None:
            return self.basis.shape[1]
        return int(self.mask.sum())

    def project(self, amplitudes: np.ndarray) -> np.ndarray:
        if self.basis is not None:
            return self.basis @ (self.basis.conj().T @ amplitudes)
        if not self.transforms:
            return np.where(self.mask, amplitudes, 0.0)
        shape = tuple(m.shape[0] for m in self.transforms)
        hat = _apply_axes(np.reshape(amplitudes, shape), self.transforms)
        hat = np.where(np.reshape(self.mask, shape), hat, 0.0)
        back = _apply_axes(hat, [m.conj().T for m in self.transforms])
        return back.ravel()


@dataclass(frozen=True, eq=False)
class Operator:
    """A linear operator on C^dim.

    ``representation`` is one of ``"dense"`` (``data`` is the full matrix),
    ``"position-diagonal"`` (``data`` is the diagonal in the standard basis) or
    ``"momentum-diagonal"`` (``data`` is the diagonal in the frame
    ``F = transforms[0] (x) transforms[1] (x) ...``, i.e. the operator is
    ``F^dagger diag(data) F``). Diagonal forms are never densified unless asked.
    """

    data: np.ndarray
    representation: str = DENSE
    transforms: tuple = field(default=())

    def __post_init__(self):
        data = _frozen(self.data)
        if self.representation == DENSE:
            if data.ndim != 2 or data.shape[0] != data.shape[1]:
                raise DimMismatch(f"dense operator must be square, got {data.shape}")
        elif self.representation in (POSITION_DIAGONAL, MOMENTUM_DIAGONAL):
            data = _frozen(np.ravel(data))
        else:
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.representation == MOMENTUM_DIAGONAL:
            mats = tuple(_frozen(m) for m in self.transforms)
            if int(np.prod([m.shape[0] for m in mats])) != data.shape[0]:
                raise DimMismatch("transform shape does not match the diagonal")
            object.__setattr__(self, "transforms", mats)
        else:
            object.__setattr__(self, "transforms", ())
        object.__setattr__(self, "data", data)

    # construction -------------------------------------------------------

    @classmethod
    def from_matrix(cls, matrix) -> "Operator":
        return cls(np.asarray(matrix, dtype=complex), DENSE)

    @classmethod
    def diagonal(cls, values) -> "Operator":
        return cls(np.asarray(values), POSITION_DIAGONAL)

    @classmethod
    def diagonal_in(cls, values, transforms: Sequence[np.ndarray]) -> "Operator":
        return cls(np.asarray(values), MOMENTUM_DIAGONAL, tuple(transforms))

    @classmethod
    def identity(cls, dim: int) -> "Operator":
        return cls.diagonal(np.ones(dim))

    # basic properties ---------------------------------------------------

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.representation != DENSE

    def matrix(self) -> np.ndarray:
        """Dense matrix; raises ``TooLarge`` for structured operators above the cap."""
        if self.representation == DENSE:
            return self.data
        if self.dim > DENSE_CAP:
            raise TooLarge(f"refusing to densify a {self.dim}-dimensional operator")
        if self.representation == POSITION_DIAGONAL:
            return np.diag(self.data)
        frame = _frame_matrix(self.transforms)
        return frame.conj().T @ (self.data[:, None] * frame)

    def hermiticity_residual(self) -> float:
        if self.is_diagonal:
            return float(np.max(np.abs(self.data.imag), initial=0.0))
        return float(np.max(np.abs(self.data - self.data.conj().T), initial=0.0))

    def is_self_adjoint(self, tol: float = ALGEBRAIC_TOL) -> bool:
        return self.hermiticity_residual() < tol

    def adjoint(self) -> "Operator":
        if self.representation == DENSE:
            return Operator(self.data.conj().T)
        return Operator(self.data.conj(), self.representation, self.transforms)

    # action -------------------------------------------------------------

    def apply(self, vector) -> np.ndarray:
        v = vector.amplitudes if isinstance(vector, StateVector) else np.asarray(vector)
        _check_dims(self.dim, v.shape[0])
        if self.representation == DENSE:
            return self.data @ v
        if self.representation == POSITION_DIAGONAL:
            return self.data * v
        shape = tuple(m.shape[0] for m in self.transforms)
        hat = _apply_axes(np.reshape(v, shape), self.transforms)
        hat = hat * np.reshape(self.data, shape)
        return _apply_axes(hat, [m.conj().T for m in self.transforms]).ravel()

    def _same_frame(self, other: "Operator") -> bool:
        if self.representation != other.representation or not self.is_diagonal:
            return False
        if self.representation == POSITION_DIAGONAL:
            return True
        return len(self.transforms) == len(other.transforms) and all(
            a is b or np.array_equal(a, b) for a, b in zip(self.transforms, other.transforms)
        )

    def _combine(self, other: "Operator", fn) -> "Operator":
        _check_dims(self.dim, other.dim)
        if self._same_frame(other):
            return Operator(fn(self.data, other.data), self.representation, self.transforms)
        return Operator(fn(self.matrix(), other.matrix()))

    def __matmul__(self, other):
        if isinstance(other, Operator):
            if self._same_frame(other):
                return self._combine(other, np.multiply)
            return self._combine(other, np.matmul)
        if isinstance(other, StateVector):
            return StateVector(self.apply(other))
        return NotImplemented

    def __add__(self, other: "Operator") -> "Operator":
        return self._combine(other, np.add)

    def __sub__(self, other: "Operator") -> "Operator":
        return self._combine(other, np.subtract)

    def __neg__(self) -> "Operator":
        return Operator(-self.data, self.representation, self.transforms)

    def __mul__(self, scalar) -> "Operator":
        return Operator(scalar * self.data, self.representation, self.transforms)

    __rmul__ = __mul__

    # spectral calculus --------------------------------------------------

    def function(self, f: Callable[[np.ndarray], np.ndarray]) -> "Operator":
        """``f(self)`` by spectral calculus; ``f`` acts elementwise on real arrays."""
        if self.is_diagonal:
            return Operator(np.asarray(f(self.data.real), dtype=complex),
                            self.representation, self.transforms)
        dec = eigendecompose(self)
        vals = np.asarray(f(dec.eigenvalues), dtype=complex)
        v = dec.eigenvectors
        return Operator((v * vals) @ v.conj().T)

    @functools.cached_property
    def eigenspaces(self) -> tuple[Eigenspace, ...]:
        """Eigenspaces grouped by eigenvalue (clustered within ``CLUSTER_TOL``)."""
        if self.hermiticity_residual() > SPECTRAL_TOL:
            raise NotSelfAdjoint(f"hermiticity residual {self.hermiticity_residual():.3g}")
        if self.is_diagonal:
            values = self.data.real
            order = np.argsort(values, kind="stable")
            spaces = []
            for group in _clusters(values[order]):
                idx = order[group]
                mask = np.zeros(self.dim, dtype=bool)
                mask[idx] = True
                spaces.append(Eigenspace(float(np.mean(values[idx])), mask=mask,
                                         transforms=self.transforms))
            return tuple(spaces)
        dec = eigendecompose(self)
        return tuple(
            Eigenspace(float(np.mean(dec.eigenvalues[g])), basis=dec.eigenvectors[:, g])
            for g in _clusters(dec.eigenvalues)
        )


def _clusters(sorted_values: np.ndarray, tol: float = CLUSTER_TOL) -> list[slice]:
    groups, start = [], 0
    for i in range(1, len(sorted_values) + 1):
        if i == len(sorted_values) or sorted_values[i] - sorted_values[i - 1] > tol:
            groups.append(slice(start, i))
            start = i
    return groups


def _frame_matrix(transforms: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in transforms:
        out = np.kron(out, m)
    return out


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def vector(self, n: int) -> StateVector:
        return StateVector(self.eigenvectors[:, n])

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def gram(self) -> np.ndarray:
        v = self.eigenvectors
        return v.conj().T @ v


def _phase_fix(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            c = col[nz[0]]
            out[:, j] = col * (abs(c) / c)
    return out


def eigendecompose(op: Operator) -> SpectralDecomposition:
    """Eigenvalues ascending with orthonormal, phase-fixed eigenvectors.

    Ties (eigenvalues within ``CLUSTER_TOL``) are ordered lexicographically by
    the rounded real and imaginary parts of the eigenvector components.
    """
    residual = op.hermiticity_residual()
    if residual > SPECTRAL_TOL:
        raise NotSelfAdjoint(f"hermiticity residual {residual:.3g} exceeds {SPECTRAL_TOL}")
    m = op.matrix()
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    vecs = _phase_fix(vecs)
    order = np.arange(len(vals))
    for g in _clusters(vals):
        idx = order[g]
        if len(idx) > 1:
            keys = [tuple(np.round(np.column_stack([vecs[:, i].real, vecs[:, i].imag]), 9).ravel())
                    for i in idx]
            order[g] = idx[sorted(range(len(idx)), key=lambda t: keys[t])]
    return SpectralDecomposition(_frozen(vals[order], float), _frozen(vecs[:, order]))


@dataclass(frozen=True, eq=False)
class Basis:
    """An orthonormal basis, stored as the columns of ``vectors``."""

    vectors: np.ndarray

    def __post_init__(self):
        v = _frozen(self.vectors)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimMismatch(f"basis matrix must be square, got {v.shape}")
        err = np.max(np.abs(v.conj().T @ v - np.eye(v.shape[0])))
        if err > ALGEBRAIC_TOL:
            raise NotOrthonormal(f"Gram matrix deviates from identity by {err:.3g}")
        object.__setattr__(self, "vectors", v)

    @classmethod
    def standard(cls, dim: int) -> "Basis":
        return cls(np.eye(dim, dtype=complex))

    @classmethod
    def from_states(cls, states: Sequence[StateVector]) -> "Basis":
        return cls(np.column_stack([s.amplitudes for s in states]))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "Basis":
        """Haar-random orthonormal basis."""
        z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        q, r = np.linalg.qr(z)
        d = np.diag(r)
        return cls(q * (d / np.abs(d)))

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def __len__(self):
        return self.dim

    def __getitem__(self, n: int) -> StateVector:
        return StateVector(self.vectors[:, n])

    def coefficients(self, vector) -> np.ndarray:
        v = vector.amplitudes if isinstance(vector, StateVector) else np.asarray(vector)
        return self.vectors.conj().T @ v

    def gram(self) -> np.ndarray:
        return self.vectors.conj().T @ self.vectors


def tensor_state(a: StateVector, b: StateVector) -> StateVector:
    return StateVector(np.kron(a.amplitudes, b.amplitudes))


def tensor_op(a: Operator, b: Operator) -> Operator:
    """Kronecker product. Structure is kept when both factors are diagonal in compatible frames."""
    if a.representation == b.representation == POSITION_DIAGONAL:
        return Operator.diagonal(np.kron(a.data, b.data))
    if a.representation == b.representation == MOMENTUM_DIAGONAL:
        return Operator.diagonal_in(np.kron(a.data, b.data), a.transforms + b.transforms)
    return Operator.from_matrix(np.kron(a.matrix(), b.matrix()))


def commutator(a: Operator, b: Operator) -> Operator:
    _check_dims(a.dim, b.dim)
    return a @ b - b @ a


def anticommutator(a: Operator, b: Operator) -> Operator:
    _check_dims(a.dim, b.dim)
    return a @ b + b @ a


def operator_norm(op: Operator) -> float:
    """Spectral norm (largest singular value)."""
    if op.representation == POSITION_DIAGONAL or op.representation == MOMENTUM_DIAGONAL:
        return float(np.max(np.abs(op.data), initial=0.0))
    return float(np.linalg.norm(op.data, 2))


PAULI_X = Operator.from_matrix([[0, 1], [1, 0]])
PAULI_Y = Operator.from_matrix([[0, -1j], [1j, 0]])
PAULI_Z = Operator.from_matrix([[1, 0], [0, -1]])
