"""Built-in self checks behind ``icbeam validate``.

Small, fast, deterministic spot checks of the identities the design relies
on: rate/error duality, power feasibility of both precoder updates, the
monotone multiplier search, robust-to-nominal reduction, monotone ascent of
the alternating loop, the closed-form cost model, and CSV reproducibility.
They are not a substitute for the test suite; they are a smoke test for an
installed copy.
"""

import os
import tempfile
from typing import Callable, List, Tuple

import numpy as np

from . import _kernels as _k
from .channel import NetworkDims, generate_channels, snr_to_sigma_h
from .complexity import ComplexityParams, feedback_amounts
from .filters import (
    PerNodePower,
    SumPower,
    error_covariance,
    per_node_power,
    per_node_precoder,
    rate_from_error,
    achievable_rate,
    mse_weights,
    mmse_receiver,
    sum_power_precoders,
)
from .harness import (
    ExperimentSpec,
    run_experiment,
    table_to_csv_text,
)
from .optimizer import OptimizerConfig, run_algorithm1
from .robust import RobustContext, robust_receiver
from .channel import apply_mismatch


def _check_channel_determinism() -> None:
    dims = NetworkDims(2, 3, 2, 1)
    a = generate_channels(dims, 1.7, (11, 4, 0))
    b = generate_channels(dims, 1.7, (11, 4, 0))
    assert np.array_equal(a.entries, b.entries), "same seed must give same draw"
    z = generate_channels(dims, 0.0, 5)
    assert np.all(z.entries == 0), "zero variance must give zero channels"


def _check_duality() -> None:
    rng = np.random.default_rng(1)
    for _ in range(50):
        dims = NetworkDims(3, 3, 3, 2)
        ch = generate_channels(dims, 2.0, int(rng.integers(1 << 30)))
        V = (rng.standard_normal((3, 3, 2)) + 1j * rng.standard_normal((3, 3, 2)))
        V = np.ascontiguousarray(V, dtype=np.complex128)
        for k in range(3):
            r1 = achievable_rate(ch, V, k)
            r2 = rate_from_error(error_covariance(ch, V, k))
            assert abs(r1 - r2) < 1e-9, f"duality violated: {r1} vs {r2}"


def _check_power_feasibility() -> None:
    rng = np.random.default_rng(2)
    dims = NetworkDims(3, 4, 4, 2)
    for _ in range(25):
        ch = generate_channels(dims, 3.0, int(rng.integers(1 << 30)))
        V = np.ascontiguousarray(
            rng.standard_normal((3, 4, 2)) + 1j * rng.standard_normal((3, 4, 2))
        )
        U, E = _k.receivers_and_errors(ch.entries, V, 0.0)
        W = mse_weights(E, np.ones(3))
        Vs, _ = sum_power_precoders(ch, U, W, 3.0)
        assert abs(_k.total_power(Vs) - 3.0) < 1e-9 * 3.0, "sum power must be exact"
        for k in range(3):
            Vk, lam = per_node_precoder(ch, U, W, k, 1.0)
            p = float(np.sum(np.abs(Vk) ** 2))
            assert lam >= 0
            assert p <= 1.0 + 1e-6, "per-node budget exceeded"
            if lam > 0:
                assert abs(p - 1.0) <= 1e-6, "active constraint must bind"


def _check_multiplier_monotone() -> None:
    rng = np.random.default_rng(3)
    for _ in range(10):
        A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        psi = A @ A.conj().T
        rhs = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        lams = np.linspace(0.0, 5.0, 30)
        powers = [per_node_power(psi, rhs, lam) for lam in lams]
        assert all(
            powers[i] >= powers[i + 1] - 1e-12 for i in range(len(powers) - 1)
        ), "power must fall as the multiplier grows"


def _check_robust_reduction() -> None:
    dims = NetworkDims(2, 3, 3, 1)
    ch = generate_channels(dims, 1.0, 7)
    rng = np.random.default_rng(4)
    V = np.ascontiguousarray(
        rng.standard_normal((2, 3, 1)) + 1j * rng.standard_normal((2, 3, 1))
    )
    ctx = RobustContext(ch, 0.0)
    for k in range(2):
        nominal = mmse_receiver(ch, V, k)
        loaded = robust_receiver(ctx, V, k)
        assert np.allclose(nominal, loaded, atol=1e-12), "sigma=0 must reduce"


def _check_monotone_ascent() -> None:
    dims = NetworkDims(3, 4, 4, 2)
    cfg = OptimizerConfig(epsilon=1e-6, max_iters=3000)
    for seed, constraint in ((0, SumPower(3.0)), (1, PerNodePower(np.ones(3)))):
        ch = generate_channels(dims, snr_to_sigma_h(10.0), seed)
        _, trace = run_algorithm1(ch, dims, np.ones(3), constraint, cfg)
        diffs = np.diff(trace.rates)
        assert np.all(diffs > -1e-8), "objective must not decrease"
        assert trace.converged, "should converge well before the cap"


def _check_mismatch_statistics() -> None:
    dims = NetworkDims(2, 4, 4, 1)
    ch = generate_channels(dims, 1.0, 9)
    mism = apply_mismatch(ch, 0.25, 10)
    delta = mism.estimated_channels.entries - ch.entries
    var = float(np.mean(np.abs(delta) ** 2))
    assert abs(var - 0.25) < 0.08, f"mismatch variance off: {var}"
    again = apply_mismatch(ch, 0.25, 10)
    assert np.array_equal(
        again.estimated_channels.entries, mism.estimated_channels.entries
    )


def _check_cost_model() -> None:
    fb = feedback_amounts(ComplexityParams(4, 5, 5, 2))
    assert fb.gradient == 700.0, fb.gradient
    assert fb.wmmse_pernode == 660.0, fb.wmmse_pernode
    assert fb.wmmse_sum == 670.0, fb.wmmse_sum


def _check_csv_reproducible() -> None:
    spec = ExperimentSpec(
        dims=NetworkDims(2, 2, 2, 1),
        snr_db=(5.0,),
        methods=("wmmse",),
        trials=4,
        master_seed=123,
        optimizer=OptimizerConfig(max_iters=60),
    )
    t1 = table_to_csv_text(run_experiment(spec))
    t2 = table_to_csv_text(run_experiment(spec))
    assert t1 == t2, "same spec must give byte-identical CSV"
    assert t1.endswith("\n") and "\r" not in t1


CHECKS: List[Tuple[str, Callable[[], None]]] = [
    ("channel determinism", _check_channel_determinism),
    ("rate/error duality", _check_duality),
    ("precoder power feasibility", _check_power_feasibility),
    ("multiplier search monotone", _check_multiplier_monotone),
    ("robust reduces to nominal", _check_robust_reduction),
    ("alternating ascent monotone", _check_monotone_ascent),
    ("mismatch statistics", _check_mismatch_statistics),
    ("cost model spot values", _check_cost_model),
    ("CSV reproducibility", _check_csv_reproducible),
]


def run_validation(verbose: bool = True) -> int:
    """Run every self check. Returns the number of failures."""
    failures = 0
    for name, fn in CHECKS:
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report, do not crash the loop
            failures += 1
            if verbose:
                print(f"FAIL {name}: {exc}")
        else:
            if verbose:
                print(f"PASS {name}")
    return failures
