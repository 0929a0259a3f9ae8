"""Acceptance gate: one test per release criterion.

Each test prints a single summary line with the measured quantity and its
tolerance, then asserts.  The expensive Monte Carlo sweeps are shared
through module-scoped fixtures so the whole gate stays within a desk-scale
runtime budget.
"""

import numpy as np
import pytest

import icbeam as ic
from icbeam import _kernels as _k
from icbeam.harness import table_to_csv_text

RNG = np.random.default_rng


def _line(num: int, label: str, detail: str, ok: bool) -> None:
    print(f"criterion {num:02d} [{label}]: {detail} -> {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num:02d} {label}: {detail}"


def _random_dims(rng, k_max=4, a_max=4):
    K = int(rng.integers(1, k_max + 1))
    M = int(rng.integers(1, a_max + 1))
    N = int(rng.integers(1, a_max + 1))
    d = int(rng.integers(1, min(M, N) + 1))
    return ic.NetworkDims(K, M, N, d)


def _random_precoders(rng, dims, power=1.0):
    V = rng.standard_normal((dims.K, dims.M, dims.d)) + 1j * rng.standard_normal(
        (dims.K, dims.M, dims.d)
    )
    for k in range(dims.K):
        V[k] *= np.sqrt(power / np.sum(np.abs(V[k]) ** 2))
    return V.astype(np.complex128)


def _mmse_stack(ch, V, mu):
    U = np.array([ic.mmse_receiver(ch, V, i) for i in range(ch.K)])
    E = np.array([ic.error_covariance(ch, V, i) for i in range(ch.K)])
    return U, ic.mse_weights(E, mu)


# --------------------------------------------------------------------------
# shared Monte Carlo sweeps

DIMS_BENCH = ic.NetworkDims(4, 5, 5, 2)
OPT_TIGHT = ic.OptimizerConfig(epsilon=1e-5, max_iters=1000)
OPT_BUDGETED = ic.OptimizerConfig(epsilon=1e-12, max_iters=10)


@pytest.fixture(scope="module")
def equal_weight_tables():
    tables = {}
    tables["sum"] = ic.run_experiment(
        ic.ExperimentSpec(
            dims=DIMS_BENCH,
            snr_db=(0.0, 10.0, 20.0),
            constraint="sum",
            methods=("wmmse", "simple_mmse", "gradient"),
            trials=100,
            master_seed=1000,
            optimizer=OPT_TIGHT,
        )
    )
    tables["pernode"] = ic.run_experiment(
        ic.ExperimentSpec(
            dims=DIMS_BENCH,
            snr_db=(0.0, 10.0, 20.0),
            constraint="pernode",
            methods=("wmmse",),
            trials=100,
            master_seed=1000,
            optimizer=OPT_TIGHT,
        )
    )
    return tables


@pytest.fixture(scope="module")
def unequal_weight_tables():
    mu = (2.0, 0.25, 0.25, 0.25)
    out = {}
    for constraint in ("sum", "pernode"):
        out[constraint] = ic.run_experiment(
            ic.ExperimentSpec(
                dims=DIMS_BENCH,
                snr_db=(0.0, 10.0, 20.0),
                mu=mu,
                constraint=constraint,
                methods=("wmmse",),
                trials=100,
                master_seed=2000,
                optimizer=OPT_TIGHT,
            )
        )
    return out


@pytest.fixture(scope="module")
def robust_tables():
    out = {}
    for constraint in ("sum", "pernode"):
        out[constraint] = ic.run_experiment(
            ic.ExperimentSpec(
                dims=DIMS_BENCH,
                snr_db=(5.0, 15.0, 25.0),
                constraint=constraint,
                methods=("wmmse",),
                robust=ic.RobustSettings(sigma_delta_frac=0.1, sigma_eps_frac=0.0),
                trials=100,
                master_seed=0,
                optimizer=OPT_BUDGETED,
            )
        )
    out["sum_over"] = ic.run_experiment(
        ic.ExperimentSpec(
            dims=DIMS_BENCH,
            snr_db=(15.0,),
            constraint="sum",
            methods=("wmmse",),
            robust=ic.RobustSettings(sigma_delta_frac=0.1, sigma_eps_frac=0.1),
            trials=100,
            master_seed=0,
            optimizer=OPT_BUDGETED,
        )
    )
    return out


# --------------------------------------------------------------------------


def test_criterion_01_rate_error_duality():
    # 1000 random instances; |R_k - log2 det(E_k^{-1})| < 1e-9 for every user
    rng = RNG(801)
    worst = 0.0
    for i in range(1000):
        dims = _random_dims(rng)
        ch = ic.generate_channels(dims, 2.0, (801, i))
        V = _random_precoders(rng, dims)
        for k in range(dims.K):
            r_cov = ic.achievable_rate(ch, V, k)
            r_err = ic.rate_from_error(ic.error_covariance(ch, V, k))
            worst = max(worst, abs(r_cov - r_err))
    _line(1, "rate/error duality", f"worst |R - logdet| = {worst:.3e}, tol 1e-9", worst < 1e-9)


def test_criterion_02_empirical_mse_oracle():
    # 20 instances x 1e5 symbol draws; empirical MSE within 3% of Tr(E_k)
    rng = RNG(902)
    worst = 0.0
    for i in range(20):
        dims = _random_dims(rng, k_max=3, a_max=3)
        ch = ic.generate_channels(dims, 1.0, (902, i))
        V = _random_precoders(rng, dims)
        U = np.array([ic.mmse_receiver(ch, V, k) for k in range(dims.K)])
        for k in range(dims.K):
            analytic = float(np.trace(ic.error_covariance(ch, V, k)).real)
            mc = ic.empirical_mse(ch, V, U, k, num_samples=100_000, seed=(902, i, k))
            worst = max(worst, abs(mc - analytic) / analytic)
    _line(2, "empirical MSE", f"worst relative error = {worst:.4f}, tol 0.03", worst < 0.03)


def test_criterion_03_multiplier_search():
    # 100 random PSD Psi: power non-increasing on 50-point grids; bisection
    # hits |power - budget|/budget <= 1e-6 unless it reports a lam=0 clamp
    rng = RNG(303)
    monotone_ok = True
    bisect_ok = True
    for i in range(100):
        M = int(rng.integers(1, 6))
        d = int(rng.integers(1, min(M, 3) + 1))
        A = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
        psi = (A @ A.conj().T).astype(np.complex128)
        rhs = (rng.standard_normal((M, d)) + 1j * rng.standard_normal((M, d))).astype(
            np.complex128
        )
        grid = np.sort(rng.uniform(0.0, 10.0, size=50))
        vals = np.array([ic.per_node_power(psi, rhs, lam) for lam in grid])
        if np.any(np.diff(vals) > 1e-12 * (1.0 + vals[:-1])):
            monotone_ok = False
        budget = float(rng.uniform(0.05, 5.0))
        V, lam, power, status = _k.solve_power_constrained(
            psi, rhs, budget, 0.0, 1e-6, 200
        )
        if status == 1:
            if not (lam == 0.0 and power <= budget * (1 + 1e-6)):
                bisect_ok = False
        elif status == 0:
            if abs(power - budget) / budget > 1e-6:
                bisect_ok = False
    ok = monotone_ok and bisect_ok
    _line(
        3,
        "multiplier search",
        f"monotone={monotone_ok}, bisection tol 1e-6 met or clamped={bisect_ok}",
        ok,
    )


def test_criterion_04_power_feasibility():
    # sum: exact budget (1e-9 relative) on every iteration; per-node: every
    # met constraint within the bisection tolerance, none above budget
    dims = ic.NetworkDims(3, 3, 3, 2)
    tol = 1e-8
    cfg = ic.OptimizerConfig(epsilon=1e-6, max_iters=300, bisection_tol=tol)
    worst_sum = 0.0
    worst_pn = 0.0
    over_budget = False
    for t in range(25):
        ch = ic.generate_channels(dims, ic.snr_to_sigma_h(10.0), (404, t))
        state, trace = ic.run_algorithm1(ch, dims, np.ones(3), ic.SumPower(3.0), cfg)
        worst_sum = max(worst_sum, float(np.max(trace.power_residuals)))
        state, trace = ic.run_algorithm1(
            ch, dims, np.ones(3), ic.PerNodePower(np.ones(3)), cfg
        )
        if trace.power_residuals.size:
            worst_pn = max(worst_pn, float(np.max(trace.power_residuals)))
        for k in range(3):
            if np.sum(np.abs(state.precoders[k]) ** 2) > 1.0 + 10 * tol:
                over_budget = True
    ok = worst_sum < 1e-9 and worst_pn <= tol and not over_budget
    _line(
        4,
        "power feasibility",
        f"sum residual {worst_sum:.2e} (tol 1e-9), per-node residual {worst_pn:.2e} "
        f"(tol {tol:g}), over-budget={over_budget}",
        ok,
    )


def test_criterion_05_monotone_convergence():
    # 200 desk instances x both constraints at 10 dB: rates non-decreasing
    # within 1e-6 relative, >= 99% converge before 200 iterations, median <= 30
    dims = ic.NetworkDims(3, 3, 3, 1)
    sig = ic.snr_to_sigma_h(10.0)
    cfg = ic.OptimizerConfig()
    iters = []
    converged = 0
    runs = 0
    violations = 0
    for t in range(200):
        ch = ic.generate_channels(dims, sig, (500, t))
        for constraint in (ic.SumPower(3.0), ic.PerNodePower(np.ones(3))):
            _, tr = ic.run_algorithm1(ch, dims, np.ones(3), constraint, cfg)
            runs += 1
            converged += int(tr.converged)
            iters.append(tr.iterations)
            r = tr.rates
            if np.any(np.diff(r) < -1e-6 * (1.0 + np.abs(r[:-1]))):
                violations += 1
    frac = converged / runs
    med = float(np.median(iters))
    ok = violations == 0 and frac >= 0.99 and med <= 30
    _line(
        5,
        "monotone convergence",
        f"violations {violations}, converged {100*frac:.1f}% (need >=99%), "
        f"median iterations {med:.0f} (need <=30)",
        ok,
    )


def test_criterion_06_weight_gradient_alignment():
    # 50 random K=2 scalar-stream instances: the finite-difference gradient of
    # the weighted MSE (at MMSE receivers and rate-matched weights) equals the
    # negative analytic WSR gradient within 1e-4 relative
    rng = RNG(606)
    dims = ic.NetworkDims(2, 2, 2, 1)
    worst = 0.0
    step = 1e-6
    for i in range(50):
        ch = ic.generate_channels(dims, 1.5, (606, i))
        V = _random_precoders(rng, dims)
        mu = [float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0))]
        U, W = _mmse_stack(ch, V, mu)
        G = ic.wsr_gradient(ch, V, mu)
        fd = np.zeros_like(V)
        for k in range(2):
            for m in range(2):
                for unit in (1.0, 1j):
                    Vp, Vm = V.copy(), V.copy()
                    Vp[k, m, 0] += step * unit
                    Vm[k, m, 0] -= step * unit
                    df = (
                        ic.wmse_objective(ch, Vp, U, W)
                        - ic.wmse_objective(ch, Vm, U, W)
                    ) / (2 * step)
                    fd[k, m, 0] += df / 2.0 if unit == 1.0 else 1j * df / 2.0
        worst = max(worst, np.linalg.norm(fd + G) / np.linalg.norm(G))
    _line(6, "weight gradient alignment", f"worst relative mismatch {worst:.2e}, tol 1e-4", worst < 1e-4)


def test_criterion_07_scalar_brute_force():
    # 20 random K=2 scalar instances: per-node design within 1e-3 bits of a
    # 400x400 grid over the two transmit magnitudes
    dims = ic.NetworkDims(2, 1, 1, 1)
    cfg = ic.OptimizerConfig(epsilon=1e-9, max_iters=3000, restarts=8)
    a = np.linspace(0.0, 1.0, 400)
    P1, P2 = np.meshgrid(a**2, a**2, indexing="ij")
    worst = -np.inf
    for t in range(20):
        ch = ic.generate_channels(dims, 2.0, (700, t))
        g = np.abs(ch.entries[:, :, 0, 0]) ** 2
        grid_best = float(
            (
                np.log2(1.0 + g[0, 0] * P1 / (1.0 + g[0, 1] * P2))
                + np.log2(1.0 + g[1, 1] * P2 / (1.0 + g[1, 0] * P1))
            ).max()
        )
        _, tr = ic.run_algorithm1(
            ch, dims, np.ones(2), ic.PerNodePower(np.ones(2)), cfg
        )
        worst = max(worst, grid_best - float(tr.rates[tr.best_index]))
    _line(7, "scalar brute force", f"worst shortfall {worst:.2e} bits, tol 1e-3", worst < 1e-3)


def test_criterion_08_equal_weight_parity(equal_weight_tables):
    # K=4, M=N=5, d=2, equal weights: wmmse(sum), wmmse(per-node) and the
    # gradient baseline pairwise within 2% at 0/10/20 dB
    worst = 0.0
    for snr in (0.0, 10.0, 20.0):
        vals = [
            equal_weight_tables["sum"].find(snr, "wmmse").mean_wsr,
            equal_weight_tables["pernode"].find(snr, "wmmse").mean_wsr,
            equal_weight_tables["sum"].find(snr, "gradient").mean_wsr,
        ]
        spread = (max(vals) - min(vals)) / min(vals)
        worst = max(worst, spread)
    _line(8, "equal-weight parity", f"worst pairwise spread {100*worst:.2f}%, tol 2%", worst <= 0.02)


def test_criterion_09_unequal_weight_ordering(unequal_weight_tables):
    # mu = (2, .25, .25, .25): sum-power mean WSR >= per-node at every SNR,
    # gap at 20 dB at least one standard error of the difference
    ordered = True
    for snr in (0.0, 10.0, 20.0):
        s = unequal_weight_tables["sum"].find(snr, "wmmse")
        p = unequal_weight_tables["pernode"].find(snr, "wmmse")
        if s.mean_wsr < p.mean_wsr:
            ordered = False
    s20 = unequal_weight_tables["sum"].find(20.0, "wmmse")
    p20 = unequal_weight_tables["pernode"].find(20.0, "wmmse")
    gap = s20.mean_wsr - p20.mean_wsr
    se = float(np.hypot(s20.std_err, p20.std_err))
    ok = ordered and gap >= se
    _line(
        9,
        "unequal-weight ordering",
        f"ordered at all SNRs={ordered}, gap(20 dB) {gap:.3f} vs SE {se:.3f}",
        ok,
    )


def test_criterion_10_simple_mmse_gap_growth(equal_weight_tables):
    # designed weights beat identity weights by a margin that grows with SNR
    t = equal_weight_tables["sum"]
    gap0 = t.find(0.0, "wmmse").mean_wsr - t.find(0.0, "simple_mmse").mean_wsr
    gap20 = t.find(20.0, "wmmse").mean_wsr - t.find(20.0, "simple_mmse").mean_wsr
    ok = gap20 > gap0
    _line(10, "weighting gap growth", f"gap 0 dB {gap0:.3f} < gap 20 dB {gap20:.3f}", ok)


def test_criterion_11_robust_benefit(robust_tables):
    # sigma_delta^2 = 0.1 sigma_h^2: robust mean realized WSR >= naive at
    # 5/15/25 dB under both constraints, and both families saturate
    ok = True
    details = []
    for constraint in ("sum", "pernode"):
        t = robust_tables[constraint]
        m = {
            v: {s: t.find(s, "wmmse", v).mean_wsr for s in (5.0, 15.0, 25.0)}
            for v in ("naive", "robust")
        }
        for s in (5.0, 15.0, 25.0):
            diff = m["robust"][s] - m["naive"][s]
            details.append(f"{constraint}@{s:.0f}dB {diff:+.3f}")
            if diff < 0:
                ok = False
        for v in ("naive", "robust"):
            if not (m[v][25.0] - m[v][15.0]) < (m[v][15.0] - m[v][5.0]):
                ok = False
                details.append(f"{constraint}/{v} not saturating")
    _line(11, "robust benefit", "robust-naive " + ", ".join(details), ok)


def test_criterion_12_overestimation_sensitivity(robust_tables):
    # over-estimating the error variance by 10% costs <= 5% mean WSR at 15 dB
    exact = robust_tables["sum"].find(15.0, "wmmse", "robust").mean_wsr
    over = robust_tables["sum_over"].find(15.0, "wmmse", "robust").mean_wsr
    loss = (exact - over) / exact
    _line(12, "over-estimation sensitivity", f"loss {100*loss:.2f}%, tol 5%", loss <= 0.05)


def test_criterion_13_cost_and_feedback_model():
    # frozen feedback totals, whole-run flop ordering, and CSI growth orders
    p = ic.ComplexityParams(4, 5, 5, 2, I1=10, I2=10, I3=10)
    fb = ic.feedback_amounts(p)
    exact = (fb.gradient, fb.wmmse_pernode, fb.wmmse_sum) == (700.0, 660.0, 670.0)
    ordering = True
    for K in range(2, 9):
        pk = ic.ComplexityParams(K, 5, 5, 2, I1=10, I2=10, I3=10)
        s = ic.total_multiplications(pk, "wmmse_sum")
        i = ic.total_multiplications(pk, "wmmse_pernode")
        g = ic.total_multiplications(pk, "gradient")
        if not s < i < g:
            ordering = False
    grads = [
        ic.feedback_amounts(ic.ComplexityParams(K, 5, 5, 2, I1=10)).gradient
        for K in range(1, 8)
    ]
    props = [
        ic.feedback_amounts(ic.ComplexityParams(K, 5, 5, 2, I1=10)).wmmse_pernode
        for K in range(1, 8)
    ]
    quad = np.all(np.diff(grads, n=2) == 2 * 5 * 5)
    lin = np.all(np.diff(props, n=2) == 0)
    ok = exact and ordering and bool(quad) and bool(lin)
    _line(
        13,
        "cost/feedback model",
        f"feedback (700, 660, 670)={exact}, flop ordering sum<ind<grad={ordering}, "
        f"CSI growth quadratic/linear={bool(quad)}/{bool(lin)}",
        ok,
    )


def test_criterion_14_robust_to_nominal_reduction():
    # sigma_delta^2 = 0 must reproduce every nominal operation within 1e-12
    rng = RNG(1414)
    worst = 0.0
    for i in range(100):
        dims = _random_dims(rng, k_max=3, a_max=3)
        ch = ic.generate_channels(dims, 2.0, (1414, i))
        ctx = ic.RobustContext(ch, 0.0)
        V = _random_precoders(rng, dims)
        mu = np.ones(dims.K)
        U, W = _mmse_stack(ch, V, mu)
        for k in range(dims.K):
            worst = max(
                worst,
                float(np.max(np.abs(ic.robust_receiver(ctx, V, k) - ic.mmse_receiver(ch, V, k)))),
                float(
                    np.max(
                        np.abs(
                            ic.robust_error_covariance(ctx, V, k)
                            - ic.error_covariance(ch, V, k)
                        )
                    )
                ),
            )
        E = np.array([ic.error_covariance(ch, V, k) for k in range(dims.K)])
        worst = max(
            worst,
            float(np.max(np.abs(ic.robust_weights(ctx, V, mu) - ic.mse_weights(E, mu)))),
        )
        Vn, bn = ic.sum_power_precoders(ch, U, W, float(dims.K))
        Vr, br = ic.robust_sum_power_precoders(ctx, U, W, float(dims.K))
        worst = max(worst, float(np.max(np.abs(Vn - Vr))), abs(bn - br))
        for k in range(dims.K):
            Vkn, ln = ic.per_node_precoder(ch, U, W, k, 1.0)
            Vkr, lr = ic.robust_per_node_precoder(ctx, U, W, k, 1.0)
            worst = max(worst, float(np.max(np.abs(Vkn - Vkr))), abs(ln - lr))
    _line(14, "robust-to-nominal reduction", f"worst deviation {worst:.2e}, tol 1e-12", worst < 1e-12)


def test_criterion_15_reproducible_csv(tmp_path):
    # identical experiment specs produce byte-identical CSV output
    def make_spec():
        return ic.ExperimentSpec(
            dims=ic.NetworkDims(2, 2, 2, 1),
            snr_db=(0.0, 10.0),
            constraint="sum",
            methods=("wmmse", "simple_mmse"),
            robust=ic.RobustSettings(sigma_delta_frac=0.1),
            trials=10,
            master_seed=42,
        )

    text_a = table_to_csv_text(ic.run_experiment(make_spec()))
    text_b = table_to_csv_text(ic.run_experiment(make_spec()))
    fa, fb = tmp_path / "a.csv", tmp_path / "b.csv"
    ic.emit_csv(ic.run_experiment(make_spec()), str(fa))
    ic.emit_csv(ic.run_experiment(make_spec()), str(fb))
    same = text_a == text_b and fa.read_bytes() == fb.read_bytes()
    same = same and fa.read_text(encoding="utf-8") == text_a
    _line(15, "reproducible CSV", f"byte-identical={same}", same)
