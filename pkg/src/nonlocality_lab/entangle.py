"""Maximally entangled states, their anti-linear pairing map, and partner observables.

A maximally entangled state on H (x) H is ``(1/sqrt(N)) sum_n psi_n (x) phi_n``
for orthonormal bases ``phi`` (system 1) and ``psi`` (system 2). System 2 is
the *left* tensor factor and system 1 the *right* one, so an observable ``O``
of system 1 acts as ``1 (x) O`` on the stored vector and its partner ``O~``
acts as ``O~ (x) 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, NotSelfAdjoint
from .hilbert import (
    SPECTRAL_TOL,
    Basis,
    Operator,
    StateVector,
    tensor_op,
)


@dataclass(frozen=True, eq=False)
class AntiLinearMap:
    """``U(sum c_n phi_n) = sum conj(c_n) psi_n``.

    Kept as the pair of bases rather than as a matrix so that anti-linearity is
    built in. ``inverse`` sends ``sum d_n psi_n`` to ``sum conj(d_n) phi_n``.
    """

    domain: Basis
    image: Basis

    def __post_init__(self):
        if self.domain.dim != self.image.dim:
            raise DimMismatch(f"basis dims differ: {self.domain.dim} vs {self.image.dim}")

    @property
    def dim(self) -> int:
        return self.domain.dim

    def __call__(self, vector) -> StateVector:
        c = self.domain.coefficients(vector)
        return StateVector(self.image.vectors @ c.conj())

    def inverse(self, vector) -> StateVector:
        d = self.image.coefficients(vector)
        return StateVector(self.domain.vectors @ d.conj())

    def linear_part(self) -> np.ndarray:
        """Unitary ``K`` with ``U v = K conj(v)``."""
        return self.image.vectors @ self.domain.vectors.T

    def tensor(self, other: "AntiLinearMap") -> "AntiLinearMap":
        return AntiLinearMap(
            Basis(np.kron(self.domain.vectors, other.domain.vectors)),
            Basis(np.kron(self.image.vectors, other.image.vectors)),
        )


@dataclass(frozen=True, eq=False)
class MaximallyEntangledState:
    u: AntiLinearMap
    psi: StateVector

    @property
    def N(self) -> int:
        return self.u.dim

    def coefficient_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to (system 2 index, system 1 index)."""
        return np.reshape(self.psi.amplitudes, (self.N, self.N))

    def schmidt_coefficients(self) -> np.ndarray:
        return np.linalg.svd(self.coefficient_matrix(), compute_uv=False)

    def system1(self, op: Operator) -> Operator:
        """``1 (x) op``: ``op`` acting on system 1."""
        return tensor_op(Operator.identity(self.N), op)

    def system2(self, op: Operator) -> Operator:
        """``op (x) 1``: ``op`` acting on system 2."""
        return tensor_op(op, Operator.identity(self.N))


def _mes_vector(u: AntiLinearMap, chi: Basis) -> np.ndarray:
    n = chi.dim
    total = np.zeros(n * n, dtype=complex)
    for k in range(n):
        total += np.kron(u(chi[k]).amplitudes, chi.vectors[:, k])
    return total / np.sqrt(n)


def build_from_bases(phi: Basis, psi: Basis) -> MaximallyEntangledState:
    """The state ``(1/sqrt N) sum psi_n (x) phi_n`` and the map ``U phi_n = psi_n``."""
    u = AntiLinearMap(phi, psi)
    n = phi.dim
    amps = sum(np.kron(psi.vectors[:, k], phi.vectors[:, k]) for k in range(n)) / np.sqrt(n)
    return MaximallyEntangledState(u, StateVector(amps))


def represent_in_basis(state: MaximallyEntangledState, chi: Basis) -> StateVector:
    """Re-expand the state as ``(1/sqrt N) sum U(chi_n) (x) chi_n``.

    The result does not depend on ``chi``; tests use that as a check.
    """
    if chi.dim != state.N:
        raise DimMismatch(f"basis dim {chi.dim} != {state.N}")
    return StateVector(_mes_vector(state.u, chi))


def _require_self_adjoint(op: Operator, tol: float = SPECTRAL_TOL):
    r = op.hermiticity_residual()
    if r > tol:
        raise NotSelfAdjoint(f"hermiticity residual {r:.3g}")


def partner_operator(state: MaximallyEntangledState, o: Operator) -> Operator:
    """``O~ = U O U^-1``, built column by column from the anti-linear map."""
    _require_self_adjoint(o)
    if o.dim != state.N:
        raise DimMismatch(f"operator dim {o.dim} != {state.N}")
    n = state.N
    cols = []
    for j in range(n):
        e = StateVector.basis_vector(n, j)
        cols.append(state.u(o.apply(state.u.inverse(e))).amplitudes)
    return Operator.from_matrix(np.column_stack(cols))


def partner_operator_by_conjugation(state: MaximallyEntangledState, o: Operator) -> Operator:
    """Same operator via entries: ``O~`` in the psi basis is ``conj(O)`` in the phi basis."""
    _require_self_adjoint(o)
    phi, psi = state.u.domain.vectors, state.u.image.vectors
    o_phi = phi.conj().T @ o.matrix() @ phi
    return Operator.from_matrix(psi @ o_phi.conj() @ psi.conj().T)


def correlation_residual(state: MaximallyEntangledState, o: Operator, o_tilde: Operator) -> float:
    """``|| (O on system 1 - O~ on system 2) Psi ||``; zero iff the pair is perfectly correlated."""
    if o.dim != state.N or o_tilde.dim != state.N:
        raise DimMismatch(f"operators must act on dimension {state.N}")
    diff = state.system1(o).apply(state.psi) - state.system2(o_tilde).apply(state.psi)
    return float(np.linalg.norm(diff))


def reorder_product(a: np.ndarray, na: int, b: np.ndarray, nb: int) -> np.ndarray:
    """Map ``Psi_a (x) Psi_b`` (indices a2, a1, b2, b1) to indices ((a2, b2), (a1, b1))."""
    t = np.reshape(np.kron(a, b), (na, na, nb, nb))
    return np.transpose(t, (0, 2, 1, 3)).ravel()


def product_state(a: MaximallyEntangledState, b: MaximallyEntangledState) -> MaximallyEntangledState:
    """Product of two maximally entangled states, regrouped as (sys2, sys2') (x) (sys1, sys1')."""
    u = a.u.tensor(b.u)
    out = build_from_bases(u.domain, u.image)
    direct = reorder_product(a.psi.amplitudes, a.N, b.psi.amplitudes, b.N)
    err = np.max(np.abs(direct - out.psi.amplitudes))
    if err > 1e-10:
        raise RuntimeError(f"product reordering inconsistent ({err:.3g})")
    return out


def singlet() -> MaximallyEntangledState:
    """``(|up,down> - |down,up>)/sqrt 2`` with phi = (up, down), psi = (-down, up)."""
    up, down = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    return build_from_bases(Basis.standard(2), Basis(np.column_stack([-down, up])))


def random_hermitian(dim: int, rng: np.random.Generator) -> Operator:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Operator.from_matrix((z + z.conj().T) / 2)


def random_state(dim: int, rng: np.random.Generator) -> MaximallyEntangledState:
    return build_from_bases(Basis.random(dim, rng), Basis.random(dim, rng))

