"""Finite periodic lattice, its dual, the unitary finite Fourier transform and the regularized EPR state.

Positions are ``x = n h`` and momenta ``p = 2 pi k / (h N)`` with ``N`` lattice
sites. Odd lattices (``N = 2M + 1``) use the symmetric index range
``|n| <= M``; even lattices use ``-N/2 <= n < N/2``. All modular arithmetic is
done on integer indices modulo ``N``, the full period of the lattice.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import OffLattice, TooLarge
from .hilbert import Operator, StateVector
from .measure import SeededRng, measure_collapse

DENSE_FOUR_PARTICLE_CAP = 13


@dataclass(frozen=True)
class LatticeConfig:
    spacing: float
    n_points: int

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.n_points < 2:
            raise ValueError("need at least two lattice points")

    @classmethod
    def odd(cls, half_count: int, spacing: float = 1.0) -> "LatticeConfig":
        if half_count < 1:
            raise ValueError("half_count must be >= 1")
        return cls(spacing, 2 * half_count + 1)

    @classmethod
    def even(cls, n_points: int, spacing: float = 1.0) -> "LatticeConfig":
        if n_points % 2:
            raise ValueError("even lattice needs an even number of points")
        return cls(spacing, n_points)

    @property
    def is_odd(self) -> bool:
        return self.n_points % 2 == 1

    @property
    def half_count(self) -> int:
        return self.n_points // 2

    @property
    def lowest_index(self) -> int:
        return -(self.n_points // 2)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.lowest_index, self.lowest_index + self.n_points)

    @property
    def points(self) -> np.ndarray:
        return self.indices * self.spacing

    @property
    def dual_points(self) -> np.ndarray:
        return 2 * np.pi * self.indices / (self.spacing * self.n_points)

    @property
    def box(self) -> float:
        return self.n_points * self.spacing

    def wrap(self, index):
        """Reduce integer indices into the symmetric range modulo ``n_points``."""
        lo = self.lowest_index
        return (np.asarray(index) - lo) % self.n_points + lo

    def index_of(self, x: float, strict: bool = True) -> int:
        """Integer index of a lattice position; ``strict`` also requires it to lie in range."""
        n = x / self.spacing
        i = int(round(n))
        if abs(n - i) > 1e-9 or (strict and not self.lowest_index <= i < self.lowest_index + self.n_points):
            raise OffLattice(f"{x!r} is not a point of the lattice")
        return i

    def dual_index_of(self, p: float, strict: bool = True) -> int:
        k = p * self.spacing * self.n_points / (2 * np.pi)
        i = int(round(k))
        if abs(k - i) > 1e-9 or (strict and not self.lowest_index <= i < self.lowest_index + self.n_points):
            raise OffLattice(f"{p!r} is not a point of the dual lattice")
        return i

    def dft_matrix(self) -> np.ndarray:
        return _dft_matrix(self.n_points)


@functools.lru_cache(maxsize=None)
def _dft_matrix(n_points: int) -> np.ndarray:
    # F[k, n] = exp(-i x_n p_k) / sqrt(N); x p only depends on the integer indices.
    idx = np.arange(-(n_points // 2), -(n_points // 2) + n_points)
    f = np.exp(-2j * np.pi * np.outer(idx, idx) / n_points) / np.sqrt(n_points)
    f.setflags(write=False)
    return f


@dataclass(frozen=True, eq=False)
class LatticeState:
    """Amplitudes on ``n_particles`` copies of the lattice, one array axis per particle."""

    config: LatticeConfig
    amplitudes: np.ndarray
    representation: str = "position"
    x0: float | None = field(default=None)

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if any(s != self.config.n_points for s in a.shape):
            raise ValueError(f"amplitude shape {a.shape} does not match the lattice")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def n_particles(self) -> int:
        return self.amplitudes.ndim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "LatticeState":
        return LatticeState(self.config, self.amplitudes / self.norm(), self.representation, self.x0)

    def vector(self) -> StateVector:
        return StateVector(self.amplitudes.ravel())

    def with_vector(self, amplitudes) -> "LatticeState":
        shape = self.amplitudes.shape
        return LatticeState(self.config, np.reshape(amplitudes, shape), self.representation, self.x0)


def _transform(state: LatticeState, mat: np.ndarray, representation: str) -> LatticeState:
    out = state.amplitudes
    for axis in range(out.ndim):
        out = np.moveaxis(np.tensordot(mat, out, axes=(1, axis)), 0, axis)
    return LatticeState(state.config, out, representation, state.x0)


def dft(state: LatticeState) -> LatticeState:
    """Position to momentum amplitudes, unitary ``1/sqrt(N)`` per particle axis."""
    return _transform(state, state.config.dft_matrix(), "momentum")


def idft(state: LatticeState) -> LatticeState:
    return _transform(state, state.config.dft_matrix().conj().T, "position")


def orthogonality_sum(config: LatticeConfig, x: float, sign: int = 1) -> complex:
    """``sum_p exp(sign i x p)`` over the dual lattice: ``N`` at ``x = 0`` and zero elsewhere."""
    n = config.index_of(x)
    k = config.indices
    return complex(np.sum(np.exp(sign * 2j * np.pi * n * k / config.n_points)))


def dual_orthogonality_sum(config: LatticeConfig, p: float, sign: int = 1) -> complex:
    """``sum_x exp(sign i x p)`` over the lattice: ``N`` at ``p = 0`` and zero elsewhere."""
    k = config.dual_index_of(p)
    n = config.indices
    return complex(np.sum(np.exp(sign * 2j * np.pi * n * k / config.n_points)))


def _axis_grid(config: LatticeConfig, values: np.ndarray, j: int, n_particles: int) -> np.ndarray:
    shape = [1] * n_particles
    shape[j] = config.n_points
    return np.broadcast_to(np.reshape(values, shape), (config.n_points,) * n_particles).ravel()


def position_op(config: LatticeConfig, j: int, n_particles: int = 2) -> Operator:
    """Multiplication by ``x_j`` (particles numbered from 1)."""
    if not 1 <= j <= n_particles:
        raise ValueError(f"particle {j} out of range 1..{n_particles}")
    return Operator.diagonal(_axis_grid(config, config.points, j - 1, n_particles))


def momentum_op(config: LatticeConfig, j: int, n_particles: int = 2) -> Operator:
    """``p_j``, diagonal in the Fourier frame."""
    if not 1 <= j <= n_particles:
        raise ValueError(f"particle {j} out of range 1..{n_particles}")
    f = config.dft_matrix()
    return Operator.diagonal_in(_axis_grid(config, config.dual_points, j - 1, n_particles),
                                (f,) * n_particles)


@dataclass(frozen=True)
class EprParams:
    x0: float = 0.0


def epr_forms(config: LatticeConfig, x0: float) -> dict[str, np.ndarray]:
    """Unnormalized EPR amplitudes computed three ways.

    ``plane_waves``: ``sum_p exp(i (x1 - x2 + x0) p)``;
    ``delta``: ``sqrt(N) delta(x1 - x2 + x0)`` with the lattice delta ``sqrt(N) [x == 0]``;
    ``convolution``: ``sum_x delta(x - x2 + x0) delta(x1 - x)``.
    """
    n0 = config.index_of(x0)
    idx = config.indices
    N = config.n_points
    lattice_delta = lambda m: np.sqrt(N) * (config.wrap(m) == 0)  # noqa: E731

    n1, n2 = np.meshgrid(idx, idx, indexing="ij")
    phase = (n1 - n2 + n0)[..., None] * idx[None, None, :]
    plane = np.exp(2j * np.pi * phase / N).sum(axis=-1)
    delta = np.sqrt(N) * lattice_delta(n1 - n2 + n0)
    conv = sum(lattice_delta(m - n2 + n0) * lattice_delta(n1 - m) for m in idx)
    return {"plane_waves": plane, "delta": delta.astype(complex), "convolution": conv.astype(complex)}


def build_epr_state(config: LatticeConfig, params: EprParams | float = 0.0) -> LatticeState:
    """Normalized two-particle EPR state supported on ``x1 - x2 + x0 = 0 (mod box)``."""
    x0 = params.x0 if isinstance(params, EprParams) else float(params)
    n0 = config.index_of(x0)
    idx = config.indices
    n1, n2 = np.meshgrid(idx, idx, indexing="ij")
    amps = (config.wrap(n1 - n2 + n0) == 0).astype(complex)
    return LatticeState(config, amps / np.sqrt(config.n_points), x0=n0 * config.spacing)


def _sequential(state: LatticeState, first, second, rng: SeededRng, trials: int):
    v = state.vector()
    out = []
    for i in range(trials):
        gen = rng.generator(i)
        a = measure_collapse(v, first, gen)
        b = measure_collapse(a.post_state, second, gen)
        out.append((a.eigenvalue, b.eigenvalue))
    return out


def epr_position_correlation(state: LatticeState, rng: SeededRng, trials: int,
                             first: int = 1) -> dict:
    """Measure ``Q_first`` then the other position; check ``x2 = x1 + x0`` in every trial."""
    cfg = state.config
    n0 = cfg.index_of(state.x0 or 0.0)
    q1, q2 = position_op(cfg, 1), position_op(cfg, 2)
    ops = (q1, q2) if first == 1 else (q2, q1)
    hits = 0
    for a, b in _sequential(state, *ops, rng, trials):
        i1, i2 = (cfg.index_of(a), cfg.index_of(b)) if first == 1 else (cfg.index_of(b), cfg.index_of(a))
        hits += int(cfg.wrap(i1 + n0) == i2)
    return {"trials": trials, "matches": hits, "first": first, "x0": state.x0, "ok": hits == trials}


def epr_momentum_correlation(state: LatticeState, rng: SeededRng, trials: int) -> dict:
    """Measure ``P_1`` then ``P_2``; check ``p2 = -p1`` (mod dual box) in every trial."""
    cfg = state.config
    p1, p2 = momentum_op(cfg, 1), momentum_op(cfg, 2)
    hits = 0
    counts = np.zeros(cfg.n_points, dtype=int)
    for a, b in _sequential(state, p1, p2, rng, trials):
        k1, k2 = cfg.dual_index_of(a), cfg.dual_index_of(b)
        hits += int(cfg.wrap(-k1) == k2)
        counts[k1 - cfg.lowest_index] += 1
    return {"trials": trials, "matches": hits, "p1_counts": counts.tolist(),
            "p1_values": cfg.dual_points.tolist(), "ok": hits == trials}


@dataclass(frozen=True, eq=False)
class FourParticleState:
    """Product of two EPR pairs, on particles (1, 3) and (2, 4), kept in factored form.

    System 1 is particles 1 and 2, system 2 is particles 3 and 4.
    """

    pair13: LatticeState
    pair24: LatticeState

    @property
    def config(self) -> LatticeConfig:
        return self.pair13.config

    def _slot(self, particle: int) -> tuple[str, int]:
        return {1: ("pair13", 0), 3: ("pair13", 1), 2: ("pair24", 0), 4: ("pair24", 1)}[particle]

    def dense(self) -> np.ndarray:
        """Amplitudes indexed ``[x1, x2, x3, x4]``."""
        if self.config.n_points > DENSE_FOUR_PARTICLE_CAP:
            raise TooLarge(f"dense four-particle state needs n_points <= {DENSE_FOUR_PARTICLE_CAP}")
        return np.einsum("ac,bd->abcd", self.pair13.amplitudes, self.pair24.amplitudes)

    def apply(self, particle: int, op: Operator) -> "FourParticleState":
        """Apply a single-particle operator to one particle, touching only its pair."""
        name, axis = self._slot(particle)
        pair = getattr(self, name)
        n = self.config.n_points
        mat = op.matrix()
        if mat.shape != (n, n):
            raise ValueError("expected a single-particle operator")
        new = np.moveaxis(np.tensordot(mat, pair.amplitudes, axes=(1, axis)), 0, axis)
        pair = LatticeState(pair.config, new, pair.representation, pair.x0)
        return FourParticleState(pair, self.pair24) if name == "pair13" else FourParticleState(self.pair13, pair)

    def schmidt_coefficients(self) -> np.ndarray:
        """Schmidt coefficients across (1, 2) | (3, 4), from the two pair factors."""
        s13 = np.linalg.svd(self.pair13.amplitudes, compute_uv=False)
        s24 = np.linalg.svd(self.pair24.amplitudes, compute_uv=False)
        return np.sort(np.outer(s13, s24).ravel())[::-1]


def build_four_particle_state(config: LatticeConfig, params: EprParams | float = 0.0) -> FourParticleState:
    return FourParticleState(build_epr_state(config, params), build_epr_state(config, params))


def single_particle_function(config: LatticeConfig, kind: str, f) -> Operator:
    """``f(Q)`` or ``f(P)`` on one copy of the lattice, by spectral calculus."""
    if kind == "Q":
        return Operator.diagonal(np.asarray(f(config.points), dtype=complex))
    if kind == "P":
        return Operator.diagonal_in(np.asarray(f(config.dual_points), dtype=complex),
                                    (config.dft_matrix(),))
    raise ValueError(f"kind must be 'Q' or 'P', got {kind!r}")


def four_particle_partner(config: LatticeConfig, kind: str, f, x0: float = 0.0) -> Operator:
    """Partner, on particle 1 (or 2), of ``f(K_3)`` (or ``f(K_4)``) in the four-particle state.

    On the support ``x1 = x3 - x0`` and ``p1 = -p3``, so ``f(Q_3)`` pairs with
    ``f(Q_1 + x0)`` and ``f(P_3)`` with ``f(-P_1)``.
    """
    if kind == "Q":
        n0 = config.index_of(x0)
        shifted = config.wrap(config.indices + n0) * config.spacing
        return Operator.diagonal(np.asarray(f(shifted), dtype=complex))
    return single_particle_function(config, "P", lambda p: f(-p))


def four_particle_residual(state: FourParticleState, op_a: tuple[int, Operator],
                           op_b: tuple[int, Operator]) -> float:
    """``|| A Psi - B Psi ||`` for single-particle operators on particles of the same pair."""
    (ia, a), (ib, b) = op_a, op_b
    na, nb = state._slot(ia)[0], state._slot(ib)[0]
    if na != nb:
        return float(np.linalg.norm(state.apply(ia, a).dense() - state.apply(ib, b).dense()))
    diff = getattr(state.apply(ia, a), na).amplitudes - getattr(state.apply(ib, b), na).amplitudes
    other = state.pair24 if na == "pair13" else state.pair13
    return float(np.linalg.norm(diff) * other.norm())
