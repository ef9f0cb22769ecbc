"""Finite checks of the no-go results: von Neumann's Pauli counterexample, the
oscillator incompatibility, the eigenvalue constraint on value maps, and the
Clifton/Myrvold cosine construction on a commensurate even lattice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import IncommensurateParams, NotSelfAdjoint
from .hilbert import (
    PAULI_X,
    PAULI_Y,
    SPECTRAL_TOL,
    Operator,
    anticommutator,
    commutator,
    eigendecompose,
    operator_norm,
)
from .lattice import LatticeConfig, momentum_op, position_op

SQRT2 = math.sqrt(2.0)


def von_neumann_demo() -> dict:
    """Additivity on the non-commuting pair sigma_x/sqrt2, sigma_y/sqrt2 cannot hold."""
    o, o_prime = PAULI_X * (1 / SQRT2), PAULI_Y * (1 / SQRT2)
    single = [-SQRT2 / 2, SQRT2 / 2]  # halving is exact, so the doubled sums are exactly +-sqrt(2)
    sums = sorted({round(a + b, 12): a + b for a, b in itertools.product(single, single)}.values())
    total = o + o_prime
    eig = eigendecompose(total).eigenvalues
    overlap = [s for s in sums if np.any(np.abs(eig - s) < 1e-9)]
    return {
        "value_candidates": single,
        "sums": sums,
        "eigenvalues_of_sum": [float(e) for e in eig],
        "eigenvalue_error": float(np.max(np.abs(np.sort(eig) - np.array([-1.0, 1.0])))),
        "intersection": overlap,
        "contradiction": not overlap,
    }


def oscillator_energy(vp: float, vx: float, omega: float) -> float:
    return 0.5 * (vp**2 + omega**2 * vx**2)


def oscillator_compatibility(vp: float, vx: float, omega: float, n_max: int) -> bool:
    """True if ``(vp^2 + omega^2 vx^2)/2`` equals ``omega (n + 1/2)`` for some ``0 <= n <= n_max``."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    e = oscillator_energy(vp, vx, omega)
    n = np.arange(n_max + 1)
    return bool(np.any(np.abs(e - omega * (n + 0.5)) < 1e-9))


def oscillator_sweep(vp: float, vx: float, omegas, n_max: int = 1000) -> dict:
    omegas = np.asarray(omegas, dtype=float)
    ok = np.array([oscillator_compatibility(vp, vx, w, n_max) for w in omegas])
    return {
        "vp": vp,
        "vx": vx,
        "n_omegas": int(omegas.size),
        "n_compatible": int(ok.sum()),
        "compatible_omegas": omegas[ok].tolist(),
        "first_incompatible_omega": float(omegas[~ok][0]) if (~ok).any() else None,
        "contradiction": bool((~ok).any()),
    }


def eigenvalue_constraint_demo(o: Operator, probes=None) -> dict:
    """Build ``f`` = nearest eigenvalue (so ``f`` fixes the spectrum), check ``f(O) = O``.

    Any ``v`` with ``v(O) = v(f(O)) = f(v(O))`` must be a fixed point of ``f``,
    i.e. an eigenvalue. ``probes`` lists candidate values whose fixed-point
    status is reported.
    """
    if o.hermiticity_residual() > SPECTRAL_TOL:
        raise NotSelfAdjoint(f"hermiticity residual {o.hermiticity_residual():.3g}")
    spectrum = np.array([e.value for e in o.eigenspaces])

    def f(x):
        x = np.asarray(x, dtype=float)
        return spectrum[np.argmin(np.abs(x[..., None] - spectrum), axis=-1)]

    f_o = o.function(f)
    residual = operator_norm(f_o - o)
    if probes is None:
        lo, hi = spectrum.min() - 1, spectrum.max() + 1
        probes = np.concatenate([spectrum, np.linspace(lo, hi, 41)])
    probes = np.asarray(probes, dtype=float)
    fixed = np.abs(f(probes) - probes) < 1e-12
    return {
        "spectrum": spectrum.tolist(),
        "residual": residual,
        "fixed_points": sorted({round(float(p), 12) for p in probes[fixed]}),
        "non_eigenvalue_fixed_points": int(sum(
            not np.any(np.abs(spectrum - p) < 1e-12) for p in probes[fixed])),
        "ok": residual < 1e-10,
    }


@dataclass(frozen=True, eq=False)
class CliftonSet:
    config: LatticeConfig
    clifton_a: float
    k0: int
    m: int
    A1: Operator
    A2: Operator
    B1: Operator
    B2: Operator

    @property
    def C(self) -> Operator:
        return (self.A1 @ self.A2) @ (self.B2 @ self.B1)

    @property
    def D(self) -> Operator:
        return (self.A1 @ self.B2) @ (self.A2 @ self.B1)

    def params(self) -> dict:
        return {"n_points": self.config.n_points, "k0": self.k0, "m": self.m,
                "spacing": self.config.spacing, "clifton_a": self.clifton_a,
                "pi_over_a": math.pi / self.clifton_a}


def build_clifton_set(n_points: int, k0: int, m: int, spacing: float = 1.0) -> CliftonSet:
    """``A_i = cos(a Q_i)``, ``B_i = cos(pi P_i / a)`` with ``a = 2 pi k0 / (N h)`` and ``pi / a = m h``.

    Requires ``2 k0 m = N`` so that ``a`` is a dual-lattice momentum and
    ``pi / a`` a whole number of lattice sites.
    """
    if n_points % 2 or 2 * k0 * m != n_points or k0 < 1 or m < 1:
        raise IncommensurateParams(f"need 2*k0*m == n_points with n_points even; got "
                                   f"n_points={n_points}, k0={k0}, m={m}")
    cfg = LatticeConfig.even(n_points, spacing)
    a = 2 * math.pi * k0 / (n_points * spacing)
    cosq = lambda op: op.function(lambda x: np.cos(a * x))  # noqa: E731
    cosp = lambda op: op.function(lambda p: np.cos(math.pi * p / a))  # noqa: E731
    return CliftonSet(
        cfg, a, k0, m,
        A1=cosq(position_op(cfg, 1)), A2=cosq(position_op(cfg, 2)),
        B1=cosp(momentum_op(cfg, 1)), B2=cosp(momentum_op(cfg, 2)),
    )


def weyl_operators(config: LatticeConfig, b: float, c: float) -> tuple[Operator, Operator]:
    """Single-particle ``U(b) = exp(-i b Q)`` and ``V(c) = exp(-i c P)`` (a shift by ``c``)."""
    u = Operator.diagonal(np.exp(-1j * b * config.points))
    v = Operator.diagonal_in(np.exp(-1j * c * config.dual_points), (config.dft_matrix(),))
    return u, v


def weyl_phase_check(config: LatticeConfig, b: float, c: float) -> float:
    """``|| U(b) V(c) - exp(-i b c) V(c) U(b) ||`` for ``b`` a dual point and ``c`` a lattice shift."""
    config.dual_index_of(b)
    config.index_of(c, strict=False)
    u, v = weyl_operators(config, b, c)
    um, vm = u.matrix(), v.matrix()
    return float(np.linalg.norm(um @ vm - np.exp(-1j * b * c) * (vm @ um), 2))


def weyl_sweep(config: LatticeConfig) -> float:
    """Largest Weyl residual over every (dual point, lattice shift) pair."""
    return max(weyl_phase_check(config, b, c)
               for b in config.dual_points for c in config.points)


def _norm(op: Operator) -> float:
    return operator_norm(op)


def anticommutation_by_expansion(cset: CliftonSet) -> dict:
    """Rebuild ``A B`` and ``B A`` on one particle from the four Weyl terms of the cosines."""
    cfg, a = cset.config, cset.clifton_a
    c = math.pi / a
    ab = np.zeros((cfg.n_points,) * 2, dtype=complex)
    ba = np.zeros_like(ab)
    phases = []
    for bb, cc in itertools.product((a, -a), (c, -c)):
        u, v = weyl_operators(cfg, bb, cc)
        ab += u.matrix() @ v.matrix() / 4
        ba += v.matrix() @ u.matrix() / 4
        phases.append(complex(np.exp(-1j * bb * cc)))
    a_single = Operator.diagonal(np.cos(a * cfg.points)).matrix()
    b_single = Operator.diagonal_in(np.cos(math.pi * cfg.dual_points / a), (cfg.dft_matrix(),)).matrix()
    direct_anti = a_single @ b_single + b_single @ a_single
    return {
        "term_phases": [[p.real, p.imag] for p in phases],
        "expansion_anticommutator": float(np.linalg.norm(ab + ba, 2)),
        "direct_anticommutator": float(np.linalg.norm(direct_anti, 2)),
        "product_agreement": float(np.linalg.norm(ab - a_single @ b_single, 2)),
    }


def clifton_relations_check(cset: CliftonSet) -> dict:
    """Operator-norm residuals of every algebraic relation used in the contradiction."""
    A1, A2, B1, B2 = cset.A1, cset.A2, cset.B1, cset.B2
    residuals = {
        "[A1,A2]": _norm(commutator(A1, A2)),
        "[B1,B2]": _norm(commutator(B1, B2)),
        "[A1,B2]": _norm(commutator(A1, B2)),
        "[A2,B1]": _norm(commutator(A2, B1)),
        "{A1,B1}": _norm(anticommutator(A1, B1)),
        "{A2,B2}": _norm(anticommutator(A2, B2)),
        "[A1A2,B2B1]": _norm(commutator(A1 @ A2, B2 @ B1)),
        "[A1B2,A2B1]": _norm(commutator(A1 @ B2, A2 @ B1)),
        "C+D": _norm(cset.C + cset.D),
    }
    contrast = {
        "[A1,B1]": _norm(commutator(A1, B1)),
        "[A2,B2]": _norm(commutator(A2, B2)),
    }
    hermitian = max(op.hermiticity_residual() for op in (A1, A2, B1, B2))
    return {
        "params": cset.params(),
        "residuals": residuals,
        "max_residual": max(residuals.values()),
        "commutator_contrast": contrast,
        "hermiticity_residual": hermitian,
        "expansion": anticommutation_by_expansion(cset),
        "ok": max(residuals.values()) < 1e-10 and hermitian < 1e-12,
    }


@dataclass(frozen=True)
class ValueAssignment:
    A1: float
    A2: float
    B1: float
    B2: float

    def __post_init__(self):
        for name in ("A1", "A2", "B1", "B2"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"v({name}) outside [-1, 1]")

    @property
    def v_c(self) -> float:
        # v(C) = v(A1 A2) v(B2 B1), each factor again multiplicative
        return (self.A1 * self.A2) * (self.B2 * self.B1)

    @property
    def v_d(self) -> float:
        return (self.A1 * self.B2) * (self.A2 * self.B1)

    def negation_consistent(self, tol: float = 1e-12) -> bool:
        """Whether ``v(C) = -v(D)``, as ``C = -D`` demands."""
        return abs(self.v_c + self.v_d) <= tol


def generator_spectra(config: LatticeConfig, clifton_a: float) -> dict[str, list[float]]:
    """Distinct eigenvalues of ``cos(a Q)`` and ``cos(pi P / a)`` on one particle."""
    a_vals = np.cos(clifton_a * config.points)
    b_vals = np.cos(math.pi * config.dual_points / clifton_a)
    clean = lambda v: sorted({round(float(x), 12) + 0.0 for x in v})  # noqa: E731
    return {"A": clean(a_vals), "B": clean(b_vals)}


def _admissible(spectra: dict[str, list[float]], tol: float = 1e-9) -> bool:
    return all(abs(x) > tol for x in spectra["A"] + spectra["B"])


def find_admissible_params(start_points: int, spacing: float = 1.0,
                           max_points: int | None = None) -> tuple[int, int, int] | None:
    """Smallest commensurate ``(n_points, k0, m)``, ``n_points >= start_points``, with zero-free spectra."""
    max_points = max_points or 4 * start_points + 8
    n = start_points + (start_points % 2)
    while n <= max_points:
        for k0 in range(1, n // 2 + 1):
            if (n // 2) % k0:
                continue
            m = n // (2 * k0)
            a = 2 * math.pi * k0 / (n * spacing)
            if _admissible(generator_spectra(LatticeConfig.even(n, spacing), a)):
                return n, k0, m
        n += 2
    return None


def _enumerate(spectra: dict[str, list[float]]) -> dict:
    signs = []
    for s in itertools.product((-1.0, 1.0), repeat=4):
        va = ValueAssignment(*s)
        signs.append({"values": list(s), "v_C": va.v_c, "v_D": va.v_d,
                      "negation_consistent": va.negation_consistent()})
    total = consistent = 0
    witness = None
    for a1, a2, b1, b2 in itertools.product(spectra["A"], spectra["A"], spectra["B"], spectra["B"]):
        total += 1
        va = ValueAssignment(a1, a2, b1, b2)
        if va.negation_consistent():
            consistent += 1
            witness = witness or [a1, a2, b1, b2]
    return {
        "sign_patterns": signs,
        "sign_patterns_consistent": sum(r["negation_consistent"] for r in signs),
        "spectral_assignments": total,
        "spectral_assignments_consistent": consistent,
        "consistent_example": witness,
    }


def clifton_value_map_search(cset: CliftonSet) -> dict:
    """Exhaustive search for a value map obeying both multiplicativity and ``v(-X) = -v(X)``.

    Only signs and zero/nonzero status matter: multiplicativity gives
    ``v(C) = v(D) = v(A1) v(A2) v(B1) v(B2)`` while ``C = -D`` gives
    ``v(C) = -v(D)``, so a map exists only if some generator takes the value 0.
    When the given ``clifton_a`` lets a generator vanish on its spectrum, a
    commensurate alternative without zeros is located and checked too.
    """
    relations = clifton_relations_check(cset)
    spectra = generator_spectra(cset.config, cset.clifton_a)
    admissible = _admissible(spectra)
    enumeration = _enumerate(spectra)
    zero_in_spectra = 0.0 in spectra["A"] or 0.0 in spectra["B"]
    report = {
        "params": cset.params(),
        "relations_ok": relations["ok"],
        "C_plus_D": relations["residuals"]["C+D"],
        "spectra": spectra,
        "admissible": admissible,
        "enumeration": enumeration,
        "zero_map": {"multiplicative": True, "negation_consistent": True,
                     "in_spectrum": bool(zero_in_spectra),
                     "ruled_out": not zero_in_spectra},
        "chain": [
            "C = -D as operators (residual C_plus_D)",
            "v(C) = -v(D) from v(f(X)) = f(v(X)) with f(x) = -x",
            "v(C) = v(A1 A2) v(B2 B1) = v(A1) v(A2) v(B2) v(B1) on commuting pairs",
            "v(D) = v(A1 B2) v(A2 B1) = v(A1) v(B2) v(A2) v(B1) on commuting pairs",
            "so v(C) = v(D) = -v(D), forcing a vanishing generator value",
        ],
    }
    if admissible:
        report["admissible_params"] = cset.params()
        report["contradiction"] = bool(relations["ok"]
                                       and enumeration["spectral_assignments_consistent"] == 0
                                       and enumeration["sign_patterns_consistent"] == 0)
        return report

    found = find_admissible_params(cset.config.n_points, cset.config.spacing)
    report["admissible_params"] = None
    report["contradiction"] = False
    if found is not None:
        alt = build_clifton_set(*found, spacing=cset.config.spacing)
        alt_report = clifton_value_map_search(alt)
        report["alternative"] = {k: alt_report[k] for k in
                                 ("params", "relations_ok", "C_plus_D", "spectra", "admissible")}
        report["alternative"]["spectral_assignments_consistent"] = \
            alt_report["enumeration"]["spectral_assignments_consistent"]
        report["admissible_params"] = alt.params()
        report["contradiction"] = alt_report["contradiction"]
    return report
