"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run under pytest (lines are collected into a terminal summary section) or as a
script: ``python tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from nonlocality_lab import bohm, entangle, lattice, nogo
from nonlocality_lab.hilbert import Basis, Operator, PAULI_X, PAULI_Y
from nonlocality_lab.measure import SeededRng, measure_collapse, perfect_correlation_trial


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def record(log, n: int, ok: bool, detail: str, elapsed: float, budget: float):
    passed = bool(ok) and elapsed < budget
    line = f"{'PASS' if passed else 'FAIL'} criterion {n}: {detail} [{elapsed:.2f}s, budget {budget:g}s]"
    log.append(line)
    print(line)
    assert ok, line
    assert elapsed < budget, line


def test_criterion_01_singlet_partner(acceptance_log):
    with Timer() as tm:
        s = entangle.singlet()
        o = Operator.diagonal([1.0, -1.0])
        partner = entangle.partner_operator(s, o).matrix()
        err = np.max(np.abs(partner + o.matrix()))
        # independent route: partner = C O^T C^-1 from the coefficient matrix
        c = s.coefficient_matrix()
        oracle_err = np.max(np.abs(partner - c @ o.matrix().T @ np.linalg.inv(c)))
    record(acceptance_log, 1, err < 1e-12 and oracle_err < 1e-12,
           f"singlet partner of diag(1,-1) equals -O (max entry error {err:.1e})", tm.elapsed, 1)


def test_criterion_02_perfect_correlations(acceptance_log):
    with Timer() as tm:
        worst = 0.0
        for dim in (2, 3, 5):
            gen = SeededRng(2, dim).generator()
            state = entangle.random_state(dim, gen)
            psi = state.psi.amplitudes
            for _ in range(100):
                o = entangle.random_hermitian(dim, gen)
                partner = entangle.partner_operator(state, o).matrix()
                lhs = np.kron(np.eye(dim), o.matrix()) @ psi
                rhs = np.kron(partner, np.eye(dim)) @ psi
                worst = max(worst, float(np.linalg.norm(lhs - rhs)))
        gen = SeededRng(2, 99).generator()
        state, o = entangle.random_state(3, gen), entangle.random_hermitian(3, gen)
        trial = perfect_correlation_trial(state, o, SeededRng(2, 100), 10_000)
    record(acceptance_log, 2, worst < 1e-10 and trial["matches"] == 10_000,
           f"max residual {worst:.1e} over 300 observables; {trial['matches']}/10000 trials matched",
           tm.elapsed, 10)


def test_criterion_03_basis_independence(acceptance_log):
    with Timer() as tm:
        worst = 0.0
        for i in range(100):
            dim = (2, 3, 5)[i % 3]
            gen = SeededRng(3, i).generator()
            state = entangle.random_state(dim, gen)
            phi, psi_b = state.u.domain.vectors, state.u.image.vectors
            chi = Basis.random(dim, gen).vectors
            # U(chi_n) = Psi conj(Phi^dagger chi_n), summed against chi_n
            images = psi_b @ np.conj(phi.conj().T @ chi)
            rebuilt = sum(np.kron(images[:, n], chi[:, n]) for n in range(dim)) / math.sqrt(dim)
            worst = max(worst, float(np.linalg.norm(rebuilt - state.psi.amplitudes)))
            lib = entangle.represent_in_basis(state, Basis(chi))
            worst = max(worst, lib.distance(state.psi))
    record(acceptance_log, 3, worst < 1e-12,
           f"re-expansion in 100 random bases deviates by at most {worst:.1e}", tm.elapsed, 5)


def test_criterion_04_lattice_orthogonality(acceptance_log):
    with Timer() as tm:
        ok, worst_ratio, worst_form = True, 0.0, 0.0
        for m in range(1, 7):
            cfg = lattice.LatticeConfig.odd(m, 1.0)
            n = cfg.n_points
            for i, x, p in zip(cfg.indices, cfg.points, cfg.dual_points):
                target = n if i == 0 else 0
                for sign in (1, -1):
                    r1 = abs(lattice.orthogonality_sum(cfg, x, sign) - target)
                    r2 = abs(lattice.dual_orthogonality_sum(cfg, p, sign) - target)
                    worst_ratio = max(worst_ratio, r1 / n, r2 / n)
                    ok &= r1 < 5e-9 * n and r2 < 5e-9 * n
            for x0 in (0.0, float(m), -1.0):
                f = lattice.epr_forms(cfg, x0)
                worst_form = max(worst_form, np.max(np.abs(f["plane_waves"] - f["delta"])),
                                 np.max(np.abs(f["convolution"] - f["delta"])))
    record(acceptance_log, 4, ok and worst_form < 1e-10,
           f"orthogonality residual/N <= {worst_ratio:.1e} for M <= 6; EPR forms agree to {worst_form:.1e}",
           tm.elapsed, 1)


def test_criterion_05_epr_lattice_correlations(acceptance_log):
    with Timer() as tm:
        cfg = lattice.LatticeConfig.odd(3, 1.0)
        x0 = 1.0
        v = lattice.build_epr_state(cfg, x0).vector()
        q1, q2 = lattice.position_op(cfg, 1), lattice.position_op(cfg, 2)
        p1, p2 = lattice.momentum_op(cfg, 1), lattice.momentum_op(cfg, 2)
        dual_box = 2 * math.pi / cfg.spacing
        pos_hits = mom_hits = 0
        for i in range(1000):
            gen = SeededRng(5, 0).generator(i)
            a = measure_collapse(v, q1, gen)
            b = measure_collapse(a.post_state, q2, gen)
            shift = (b.eigenvalue - a.eigenvalue - x0) / cfg.box
            pos_hits += abs(shift - round(shift)) < 1e-9
            gen = SeededRng(5, 1).generator(i)
            a = measure_collapse(v, p1, gen)
            b = measure_collapse(a.post_state, p2, gen)
            wrap = (b.eigenvalue + a.eigenvalue) / dual_box
            mom_hits += abs(wrap - round(wrap)) < 1e-9
    record(acceptance_log, 5, pos_hits == 1000 and mom_hits == 1000,
           f"Q2 = Q1 + x0 in {pos_hits}/1000, P2 = -P1 in {mom_hits}/1000 (M = 3, x0 = 1)",
           tm.elapsed, 5)


def _dense_anticommutator(n, k0):
    idx = np.arange(-n // 2, n // 2)
    a = 2 * math.pi * k0 / n
    f = np.exp(-2j * math.pi * np.outer(idx, idx) / n) / math.sqrt(n)
    ca = np.diag(np.cos(a * idx))
    cb = f.conj().T @ np.diag(np.cos(math.pi * (2 * math.pi * idx / n) / a)) @ f
    return np.linalg.norm(ca @ cb + cb @ ca, 2)


def test_criterion_06_clifton_relations(acceptance_log):
    details, ok = [], True
    with Timer() as tm:
        for n, k0, m in [(8, 1, 4), (16, 2, 4)]:
            cset = nogo.build_clifton_set(n, k0, m)
            rel = nogo.clifton_relations_check(cset)
            worst = max(rel["residuals"].values())
            weyl = nogo.weyl_sweep(cset.config)
            search = nogo.clifton_value_map_search(cset)
            alt = search["admissible_params"]
            cfg = lattice.LatticeConfig.even(alt["n_points"], alt["spacing"])
            zero_free = (np.min(np.abs(np.cos(alt["clifton_a"] * cfg.points))) > 1e-9
                         and np.min(np.abs(np.cos(math.pi * cfg.dual_points / alt["clifton_a"]))) > 1e-9)
            dense = _dense_anticommutator(n, k0)
            ok &= (worst < 1e-10 and dense < 1e-10 and weyl < 1e-12
                   and search["contradiction"] and zero_free)
            details.append(f"({n},{k0},{m}): max residual {worst:.1e}, Weyl {weyl:.1e}, "
                           f"admissible alternative N={alt['n_points']} k0={alt['k0']} m={alt['m']}")
    record(acceptance_log, 6, ok, "; ".join(details), tm.elapsed, 10)


def test_criterion_07_von_neumann(acceptance_log):
    with Timer() as tm:
        r = nogo.von_neumann_demo()
        exact_sums = r["sums"] == [-math.sqrt(2), 0.0, math.sqrt(2)]
        eig = np.linalg.eigvalsh(((PAULI_X + PAULI_Y) * (1 / math.sqrt(2))).matrix())
        eig_ok = np.max(np.abs(eig - [-1, 1])) < 1e-12 and r["eigenvalue_error"] < 1e-12
        empty = r["intersection"] == [] and r["contradiction"]
    record(acceptance_log, 7, exact_sums and eig_ok and empty,
           f"sums {r['sums']}, eigenvalues {sorted(r['eigenvalues_of_sum'])}, intersection empty",
           tm.elapsed, 1)


def test_criterion_08_trajectory_oracle(acceptance_log):
    with Timer() as tm:
        x0 = SeededRng(8).generator().uniform(-3, 3, 100)
        traj = bohm.integrate_trajectory(bohm.GaussianPacketModel.single(), x0, 10.0, dt=0.01)
        oracle = x0[None, :] * np.sqrt(1 + traj.times[:, None] ** 2)
        rel = float(np.max(np.abs(traj.positions - oracle) / np.abs(oracle)))
    record(acceptance_log, 8, rel <= 1e-6,
           f"100 trajectories over t in [0, 10], max relative error {rel:.1e}", tm.elapsed, 30)


def test_criterion_09_born_rule_momentum(acceptance_log):
    with Timer() as tm:
        r = bohm.momentum_statistics(trials=10_000, horizon=100.0, seed=9)
    var_ok = abs(r["variance"] - 0.5) <= 3 * r["variance_sigma"]
    record(acceptance_log, 9, r["ks_pvalue"] > 0.01 and var_ok,
           f"KS p-value {r['ks_pvalue']:.3f}, variance {r['variance']:.4f} "
           f"(3 sigma = {3 * r['variance_sigma']:.4f})", tm.elapsed, 120)


def test_criterion_10_equivariance(acceptance_log):
    pvals = {}
    with Timer() as tm:
        for t in (1.0, 3.0, 10.0):
            r = bohm.equivariance_test(bohm.GaussianPacketModel.single(), t, trials=10_000, seed=10)
            pvals[t] = r["ks_pvalue"]
    record(acceptance_log, 10, all(p > 0.01 for p in pvals.values()),
           "KS p-values " + ", ".join(f"t={t:g}: {p:.3f}" for t, p in pvals.items()), tm.elapsed, 120)


def sign_disagreement_oracle(k: float) -> float:
    """Probability that sgn(x + y) != sgn(x) under the entangled density, by quadrature."""
    a2 = 1.0 / (2.0 * (1.0 + math.exp(-2 * k * k)))
    rho = lambda y, x: 4 * a2 / math.pi * math.exp(-(x * x + y * y)) * math.cos(k * (x + y)) ** 2  # noqa: E731
    half, _ = integrate.dblquad(rho, 0, 9, lambda x: -12, lambda x: -x, epsabs=1e-10)
    return 2 * half


@pytest.mark.slow
def test_criterion_11_contextuality(acceptance_log):
    with Timer() as tm:
        oracle = sign_disagreement_oracle(10.0)
        r = bohm.contextuality_report(bohm.ContextualityParams(k=10.0, horizon=50.0, dt=1e-3,
                                                               trials=1000, seed=11))
    e1, e2 = r["experiment1"]["sign_agreement"], r["experiment2"]["sign_agreement"]
    d = r["disagreement_fraction"]
    ok = e1 >= 0.95 and e2 >= 0.95 and d > 0.1 and oracle > 0.1
    record(acceptance_log, 11, ok,
           f"experiment1 {e1:.3f}, experiment2 {e2:.3f} (admissible {r['experiment2']['admissible']}), "
           f"disagreement {d:.3f} vs quadrature {oracle:.3f}", tm.elapsed, 600)


def test_criterion_12_no_crossing(acceptance_log):
    with Timer() as tm:
        model = bohm.GaussianPacketModel.symmetric(math.sqrt(2) * 10)
        x0 = bohm.sample_initial(model, 400, SeededRng(12).generator())
        r = bohm.no_crossing_check(model, x0, t_end=10.0, dt=1e-3)
    record(acceptance_log, 12, r["pairs"] == 200 and r["crossed_pairs"] == 0 and r["order_violations"] == 0,
           f"{r['crossed_pairs']} crossings in {r['pairs']} neighbouring pairs, "
           f"{r['order_violations']} ordering violations over t in [0, 10]", tm.elapsed, 30)


if __name__ == "__main__":
    lines: list[str] = []
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn(lines)
            except AssertionError:
                failures += 1
    raise SystemExit(1 if failures else 0)
