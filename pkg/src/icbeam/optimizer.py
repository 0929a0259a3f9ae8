r"""Alternating weighted-MMSE optimization of the weighted sum rate.

One iteration, starting from the current precoders V:

  1. receive filters  U_k <- MMSE filter on the design channels,
  2. MSE weights      W_k <- (mu_k / ln 2) E_k^{-1},
  3. precoders        V_k <- weighted-MMSE update under the power constraint
                             (shared budget with closed-form scaling, or
                             per-node budgets via bisection).

Every step minimizes the same weighted sum-MSE surrogate, whose value at a
stationary point matches the weighted sum rate, so the tracked objective is
monotone nondecreasing and the iteration stops once successive values are
within ``epsilon``.  With a :class:`~icbeam.robust.RobustContext` the same
loop runs on the estimated channels with the error-variance loadings; the
tracked objective is then the designer's surrogate rate (the one computed
from the loaded covariances), not the realized rate on the true channels.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import _kernels as _k
from .channel import ChannelSet, NetworkDims, SeedLike, _generator, complex_gaussian
from .filters import (
    PerNodePower,
    PowerConstraint,
    SumPower,
    TransceiverState,
    check_rate_weights,
)
from .robust import RobustContext


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs of the alternating loop.

    epsilon        stop once |R_sum difference| between iterations is below this
    max_iters      hard cap on iterations
    init           'svd' (right singular vectors of the direct links) or 'random'
    init_seed      seed for random inits (and for restart draws)
    restarts       extra runs from fresh random inits; best outcome wins
    bisection_tol  relative power tolerance of the per-node multiplier search

    The default epsilon trades a few hundredths of a bit of final WSR for
    cutting the long convergence tail; tighten it (1e-6 and below) when the
    exact fixed point matters more than wall time.
    """

    epsilon: float = 5e-3
    max_iters: int = 200
    init: str = "svd"
    init_seed: int = 0
    restarts: int = 0
    bisection_tol: float = 1e-8

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.init not in ("svd", "random"):
            raise ValueError(f"init must be 'svd' or 'random', got {self.init!r}")
        if self.restarts < 0:
            raise ValueError(f"restarts must be >= 0, got {self.restarts}")
        if not self.bisection_tol > 0:
            raise ValueError(f"bisection_tol must be > 0, got {self.bisection_tol}")


@dataclass
class OptimizerTrace:
    """Diagnostics of one optimization run.

    rates          objective after init and after each iteration (len <= max_iters+1)
    converged      True when the epsilon test fired before the cap
    iterations     number of completed iterations
    best_index     index into ``rates`` of the returned iterate
    lambdas        per-node multipliers per iteration (iters x K), None for sum power
    clamp_count    per-node updates that ended below budget (lam clamped at 0)
    power_residuals  relative power-constraint violation after each iteration
    sum_mse        sum_k Tr(E_k) per iterate when MSE tracking was requested
    stopped_degenerate  True when the loop quit early on an identically zero
                        precoder target (dead direct links); the last feasible
                        iterate is returned
    """

    rates: np.ndarray
    converged: bool
    iterations: int
    best_index: int
    lambdas: Optional[np.ndarray]
    clamp_count: int
    power_residuals: np.ndarray
    sum_mse: Optional[np.ndarray] = None
    stopped_degenerate: bool = False


def _per_user_budgets(constraint: PowerConstraint, K: int) -> np.ndarray:
    if isinstance(constraint, SumPower):
        return np.full(K, constraint.total / K, dtype=np.float64)
    budgets = constraint.budgets
    if budgets.size != K:
        raise ValueError(f"constraint has {budgets.size} budgets for K={K} users")
    return budgets


def initialize_precoders(
    channels: ChannelSet,
    dims: NetworkDims,
    constraint: PowerConstraint,
    init: str = "svd",
    seed: SeedLike = 0,
) -> np.ndarray:
    """Starting precoders at exactly the per-user power split.

    'svd' takes the d dominant right singular vectors of each direct link
    H_kk (column phases fixed so the largest entry is real nonnegative);
    'random' draws CN(0, 1) entries.  Either way V_k is scaled so that
    Tr(V_k V_k^H) equals the user's budget (P_T/K under a shared budget).
    """
    budgets = _per_user_budgets(constraint, dims.K)
    V = np.empty((dims.K, dims.M, dims.d), dtype=np.complex128)
    if init == "svd":
        for k in range(dims.K):
            _, _, vh = np.linalg.svd(channels.entries[k, k])
            cols = vh.conj().T[:, : dims.d].copy()
            for j in range(dims.d):
                col = cols[:, j]
                i = int(np.argmax(np.abs(col)))
                ph = np.angle(col[i])
                cols[:, j] = col * np.exp(-1j * ph)
            V[k] = cols * np.sqrt(budgets[k] / dims.d)
    elif init == "random":
        rng = _generator(seed)
        for k in range(dims.K):
            X = complex_gaussian(rng, (dims.M, dims.d), 1.0)
            p = float(np.sum(np.abs(X) ** 2))
            V[k] = X * np.sqrt(budgets[k] / p)
    else:
        raise ValueError(f"init must be 'svd' or 'random', got {init!r}")
    return V


def _restart_precoders(
    channels: ChannelSet,
    dims: NetworkDims,
    constraint: PowerConstraint,
    seed: SeedLike,
) -> np.ndarray:
    """Exploratory random init for restart runs.

    A power-exact Gaussian draw only randomizes directions, which is no
    exploration at all once M = d (every restart starts at full power, the
    basin the first run already searched).  Restarts therefore also draw a
    log-uniform per-user power level in [0.01, 1] x budget, which lets them
    reach optima where some users transmit far below budget.  Under a shared
    budget the stack is rescaled afterwards so the total still holds with
    equality; per-node budgets are inequality constraints and stay feasible.
    """
    rng = _generator(seed)
    budgets = _per_user_budgets(constraint, dims.K)
    V = np.empty((dims.K, dims.M, dims.d), dtype=np.complex128)
    for k in range(dims.K):
        X = complex_gaussian(rng, (dims.M, dims.d), 1.0)
        X *= np.sqrt(budgets[k] / float(np.sum(np.abs(X) ** 2)))
        V[k] = X * np.sqrt(10.0 ** rng.uniform(-2.0, 0.0))
    if isinstance(constraint, SumPower):
        V *= np.sqrt(constraint.total / _k.total_power(V))
    return V


def weighted_sum_rate(channels: ChannelSet, precoders: np.ndarray, mu) -> float:
    """sum_k mu_k R_k on the given channels, in bits per channel use."""
    mu = check_rate_weights(mu, channels.K)
    return float(
        _k.weighted_rate_sum(
            channels.entries, np.ascontiguousarray(precoders, dtype=np.complex128),
            mu, 0.0,
        )
    )


def _identity_weights(K: int, d: int, mu: np.ndarray) -> np.ndarray:
    W = np.zeros((K, d, d), dtype=np.complex128)
    for k in range(K):
        for i in range(d):
            W[k, i, i] = 1.0
    return W


def _alternating_loop(
    design: ChannelSet,
    mu: np.ndarray,
    constraint: PowerConstraint,
    config: OptimizerConfig,
    sigma: float,
    V0: np.ndarray,
    frozen_identity_weights: bool = False,
    track_mse: bool = False,
) -> Tuple[TransceiverState, OptimizerTrace]:
    H = design.entries
    K, d = V0.shape[0], V0.shape[2]
    per_node = isinstance(constraint, PerNodePower)
    budgets = _per_user_budgets(constraint, K)
    total = float(np.sum(budgets)) if not per_node else 0.0

    V = np.ascontiguousarray(V0, dtype=np.complex128)
    rates: List[float] = [
        float(_k.weighted_rate_sum(H, V, mu, sigma * _k.total_power(V)))
    ]
    mse_hist: List[float] = []
    lam_hist: List[np.ndarray] = []
    residuals: List[float] = []
    clamps = 0
    degenerate = False

    best_rate = rates[0]
    best_index = 0
    best: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None

    converged = False
    iterations = 0
    for it in range(1, config.max_iters + 1):
        load = sigma * _k.total_power(V)
        U, E = _k.receivers_and_errors(H, V, load)
        if track_mse:
            mse_hist.append(float(sum(_k.trace_real(E[k]) for k in range(K))))
        if frozen_identity_weights:
            W = _identity_weights(K, d, mu)
        else:
            W = _k.weights_from_errors(E, mu)
        if best is None:
            best = (V.copy(), U.copy(), W.copy())

        t = _k.trace_wuu(U, W)
        if per_node:
            shift = sigma * t
            V_new, lams, powers, status = _k.per_node_update(
                H, U, W, budgets, shift, config.bisection_tol, 200
            )
            lam_hist.append(np.asarray(lams))
            clamps += int(np.sum(status >= 1))
            met = status == 0
            if np.any(met):
                resid = float(
                    np.max(np.abs(powers[met] - budgets[met]) / budgets[met])
                )
            else:
                resid = 0.0
            residuals.append(resid)
            V = V_new
        else:
            if t <= 0.0:
                degenerate = True
                converged = True
                iterations = it
                break
            alpha = t / total + sigma * t
            Vp = _k.sum_power_update(H, U, W, alpha)
            s = _k.total_power(Vp)
            if s <= 0.0:
                degenerate = True
                converged = True
                iterations = it
                break
            V = np.sqrt(total / s) * Vp
            residuals.append(abs(_k.total_power(V) - total) / total)

        R = float(_k.weighted_rate_sum(H, V, mu, sigma * _k.total_power(V)))
        rates.append(R)
        iterations = it
        if R >= best_rate:
            best_rate = R
            best_index = it
            best = (V.copy(), U.copy(), W.copy())
        if abs(R - rates[-2]) < config.epsilon:
            converged = True
            break

    if track_mse:
        _, E_last = _k.receivers_and_errors(H, V, sigma * _k.total_power(V))
        mse_hist.append(float(sum(_k.trace_real(E_last[k]) for k in range(K))))

    if best is None:  # max_iters == 0 cannot happen, but keep a safe fallback
        U, E = _k.receivers_and_errors(H, V, sigma * _k.total_power(V))
        W = (
            _identity_weights(K, d, mu)
            if frozen_identity_weights
            else _k.weights_from_errors(E, mu)
        )
        best = (V.copy(), U.copy(), W.copy())

    state = TransceiverState(*best)
    trace = OptimizerTrace(
        rates=np.asarray(rates),
        converged=converged,
        iterations=iterations,
        best_index=best_index,
        lambdas=np.asarray(lam_hist) if lam_hist else None,
        clamp_count=clamps,
        power_residuals=np.asarray(residuals),
        sum_mse=np.asarray(mse_hist) if track_mse else None,
        stopped_degenerate=degenerate,
    )
    return state, trace


def run_algorithm1(
    channels: ChannelSet,
    dims: NetworkDims,
    mu,
    constraint: PowerConstraint,
    config: Optional[OptimizerConfig] = None,
    robust_ctx: Optional[RobustContext] = None,
) -> Tuple[TransceiverState, OptimizerTrace]:
    """Full alternating design, returning the best iterate seen.

    ``channels`` are what the designer works on; pass ``robust_ctx`` to run
    the imperfect-CSI variant instead (the context's estimated channels then
    take over as the design channels and all updates gain the error
    loadings).  With ``config.restarts > 0`` the loop reruns from fresh
    random initializations and the best final objective wins.
    """
    config = config or OptimizerConfig()
    mu = check_rate_weights(mu, dims.K)
    if robust_ctx is not None:
        design = robust_ctx.estimated_channels
        sigma = robust_ctx.sigma_delta_sq
    else:
        design = channels
        sigma = 0.0
    if design.K != dims.K or design.M != dims.M or design.N != dims.N:
        raise ValueError(
            f"channel grid {design.entries.shape} does not match dims {dims}"
        )

    inits = [initialize_precoders(design, dims, constraint, config.init, (config.init_seed, 0))]
    for r in range(config.restarts):
        inits.append(_restart_precoders(design, dims, constraint, (config.init_seed, r + 1)))

    best_out: Optional[Tuple[TransceiverState, OptimizerTrace]] = None
    best_val = -np.inf
    for V0 in inits:
        state, trace = _alternating_loop(
            design, mu, constraint, config, sigma, V0
        )
        val = float(trace.rates[trace.best_index])
        if val > best_val:
            best_val = val
            best_out = (state, trace)
    assert best_out is not None
    return best_out
