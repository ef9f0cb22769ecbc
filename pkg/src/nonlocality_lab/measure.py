"""Projective (Born-rule) measurement with collapse, and statistical checks built on it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .entangle import MaximallyEntangledState, correlation_residual, partner_operator
from .errors import DegenerateSpectrum, DimMismatch, NotCommuting
from .hilbert import CLUSTER_TOL, SPECTRAL_TOL, Operator, StateVector, commutator, operator_norm
from .parallel import ordered_map


@dataclass(frozen=True)
class SeededRng:
    """Reproducible random streams keyed by ``(seed, stream_id, *extra)``.

    Uses the counter-based Philox generator, so streams for different trial
    indices are independent and can be consumed in any order.
    """

    seed: int
    stream_id: int = 0

    def generator(self, *extra: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *extra))
        return np.random.Generator(np.random.Philox(seq))


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, SeededRng):
        return rng.generator()
    return rng


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    eigenvalue: float
    probability: float
    post_state: StateVector


def _amplitudes(state) -> np.ndarray:
    return state.amplitudes if isinstance(state, StateVector) else np.asarray(state)


def born_distribution(state, op: Operator) -> list[tuple[float, float]]:
    """``(eigenvalue, probability)`` for each distinct eigenvalue of ``op``."""
    v = _amplitudes(state)
    if v.shape[0] != op.dim:
        raise DimMismatch(f"state dim {v.shape[0]} != operator dim {op.dim}")
    return [(e.value, float(np.vdot(p, p).real)) for e in op.eigenspaces
            for p in [e.project(v)]]


def measure_collapse(state, op: Operator, rng) -> MeasurementRecord:
    """Sample an eigenvalue by the Born rule and return the normalized projected state."""
    v = _amplitudes(state)
    if v.shape[0] != op.dim:
        raise DimMismatch(f"state dim {v.shape[0]} != operator dim {op.dim}")
    projections = [e.project(v) for e in op.eigenspaces]
    probs = np.array([np.vdot(p, p).real for p in projections])
    total = probs.sum()
    u = _generator(rng).random() * total
    k = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    k = min(k, len(probs) - 1)
    while probs[k] == 0.0:  # guards against u landing on a zero-width bin edge
        k -= 1
    post = projections[k] / np.sqrt(probs[k])
    return MeasurementRecord(op.eigenspaces[k].value, float(probs[k] / total), StateVector(post))


def perfect_correlation_trial(state: MaximallyEntangledState, o: Operator, rng: SeededRng,
                              trials: int) -> dict:
    """Measure the partner of ``o`` on system 2, then ``o`` on system 1; count agreements.

    Degenerate ``o`` is rejected because certainty of agreement is only claimed
    for nondegenerate spectra here.
    """
    if len(o.eigenspaces) != o.dim:
        raise DegenerateSpectrum(f"{o.dim - len(o.eigenspaces)} repeated eigenvalue(s)")
    o_tilde = partner_operator(state, o)
    on2 = state.system2(o_tilde)
    on1 = state.system1(o)
    on2.eigenspaces, on1.eigenspaces  # warm caches before any threads start

    def one(i: int) -> tuple[float, float]:
        gen = rng.generator(i)
        first = measure_collapse(state.psi, on2, gen)
        second = measure_collapse(first.post_state, on1, gen)
        return first.eigenvalue, second.eigenvalue

    outcomes = ordered_map(one, range(trials))
    matches = sum(abs(a - b) <= CLUSTER_TOL for a, b in outcomes)
    counts: dict[float, int] = {}
    for a, _ in outcomes:
        key = round(a, 9)
        counts[key] = counts.get(key, 0) + 1
    return {
        "trials": trials,
        "matches": matches,
        "match_rate": matches / trials if trials else 1.0,
        "correlation_residual": correlation_residual(state, o, o_tilde),
        "outcome_counts": {repr(k): v for k, v in sorted(counts.items())},
        "ok": matches == trials,
    }


def joint_eigenspaces(ops: Sequence[Operator], gen: np.random.Generator, attempts: int = 5):
    """Common eigenspaces of commuting operators with the eigenvalue tuple of each.

    The joint basis comes from diagonalizing a random real combination of the
    operators; a new combination is drawn if an eigenspace of the combination
    mixes different eigenvalues of some operator.
    """
    mats = [op.matrix() for op in ops]
    for _ in range(attempts):
        weights = gen.standard_normal(len(ops))
        combo = Operator.from_matrix(sum(w * m for w, m in zip(weights, mats)))
        out, consistent = [], True
        for space in combo.eigenspaces:
            v = space.basis
            values = []
            for m in mats:
                block = v.conj().T @ m @ v
                lam = float(np.mean(np.diag(block).real))
                if np.max(np.abs(block - lam * np.eye(block.shape[0]))) > 1e-8:
                    consistent = False
                values.append(lam)
            out.append((tuple(values), space))
        if consistent:
            return combo, out
    raise RuntimeError("could not separate joint eigenspaces")


def function_consistency_check(state, ops: Sequence[Operator], f: Callable[..., float],
                               rng: SeededRng, trials: int = 1,
                               b: Operator | None = None) -> dict:
    """Jointly measure commuting ``ops``, then measure ``B = f(ops)`` on the collapsed state.

    ``B`` defaults to the joint spectral calculus ``sum f(lambda) P_lambda``;
    pass it explicitly to check an independently built operator.
    """
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            r = operator_norm(commutator(ops[i], ops[j]))
            if r > SPECTRAL_TOL:
                raise NotCommuting(f"||[A{i + 1}, A{j + 1}]|| = {r:.3g}")
    combo, spaces = joint_eigenspaces(ops, rng.generator(0, 0))
    if b is None:
        dim = ops[0].dim
        mat = np.zeros((dim, dim), dtype=complex)
        for values, space in spaces:
            mat += f(*values) * (space.basis @ space.basis.conj().T)
        b = Operator.from_matrix(mat)
    lookup = {round(space.value, 9): values for values, space in spaces}

    consistent = 0
    rows = []
    for t in range(trials):
        gen = rng.generator(t)
        joint = measure_collapse(state, combo, gen)
        values = lookup[round(joint.eigenvalue, 9)]
        predicted = f(*values)
        measured = measure_collapse(joint.post_state, b, gen).eigenvalue
        ok = abs(predicted - measured) <= 1e-8
        consistent += ok
        if t < 20:
            rows.append({"values": list(values), "f_of_values": predicted, "measured_b": measured})
    return {"trials": trials, "consistent": consistent, "ok": consistent == trials,
            "sample": rows}
