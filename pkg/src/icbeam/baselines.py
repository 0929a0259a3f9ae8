r"""Reference schemes the weighted-MMSE design is compared against.

* ``simple_mmse_run``: the same alternating loop with the MSE weights frozen
  at identity, i.e. plain sum-MSE minimization.  It ignores the rate
  objective, so its weighted sum rate is a lower bar the weighted design
  should clear.

* ``projected_gradient_wsr``: direct ascent of the weighted sum rate with
  the conjugate Wirtinger gradient and projection back onto the power
  sphere after each step, with backtracking step halving.  Slower per unit
  of progress but optimizes the true objective, so it is the parity check
  for the alternating design.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels as _k
from .channel import ChannelSet, NetworkDims
from .filters import (
    PerNodePower,
    PowerConstraint,
    SumPower,
    TransceiverState,
    check_rate_weights,
)
from .optimizer import (
    OptimizerConfig,
    OptimizerTrace,
    _alternating_loop,
    _per_user_budgets,
    initialize_precoders,
)


@dataclass(frozen=True)
class GradientConfig:
    """Projected-gradient settings.

    outer_iters   maximum accepted ascent steps
    step_trials   backtracking halvings tried per step before giving up
    initial_step  first trial step size
    shrink        step multiplier on rejection (in (0, 1))
    epsilon       stop once an accepted step improves by less than this
    grad_mode     'analytic' or 'fd' (finite differences; slow, for checks)
    """

    outer_iters: int = 2000
    step_trials: int = 40
    initial_step: float = 1.0
    shrink: float = 0.5
    epsilon: float = 1e-8
    grad_mode: str = "analytic"

    def __post_init__(self):
        if self.outer_iters < 1:
            raise ValueError(f"outer_iters must be >= 1, got {self.outer_iters}")
        if self.step_trials < 1:
            raise ValueError(f"step_trials must be >= 1, got {self.step_trials}")
        if not self.initial_step > 0:
            raise ValueError(f"initial_step must be > 0, got {self.initial_step}")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError(f"shrink must be in (0, 1), got {self.shrink}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.grad_mode not in ("analytic", "fd"):
            raise ValueError(f"grad_mode must be 'analytic' or 'fd', got {self.grad_mode!r}")


def simple_mmse_run(
    channels: ChannelSet,
    dims: NetworkDims,
    mu,
    constraint: PowerConstraint,
    config: Optional[OptimizerConfig] = None,
) -> Tuple[TransceiverState, OptimizerTrace]:
    """Unweighted MMSE design: alternating loop with W_k = I_d throughout.

    ``mu`` only enters the reported weighted sum rate (the scheme itself is
    weight-blind).  The trace carries the per-iterate total MSE, which is
    the quantity this scheme actually drives down.
    """
    config = config or OptimizerConfig()
    mu = check_rate_weights(mu, dims.K)
    V0 = initialize_precoders(channels, dims, constraint, config.init, (config.init_seed, 0))
    return _alternating_loop(
        channels, mu, constraint, config, 0.0, V0,
        frozen_identity_weights=True, track_mse=True,
    )


def wsr_gradient(channels: ChannelSet, precoders: np.ndarray, mu) -> np.ndarray:
    """Conjugate Wirtinger gradient of the weighted sum rate in V (K, M, d)."""
    mu = check_rate_weights(mu, channels.K)
    return _k.wsr_gradient(
        channels.entries,
        np.ascontiguousarray(precoders, dtype=np.complex128),
        mu,
        0.0,
    )


def fd_wsr_gradient(
    channels: ChannelSet, precoders: np.ndarray, mu, step: float = 1e-6
) -> np.ndarray:
    """Central finite-difference conjugate gradient, entry by entry.

    The conjugate derivative relates to the real ones by
    dR/dconj(v) = (dR/dRe v + i dR/dIm v) / 2.  O(K M d) rate evaluations;
    only sensible at toy sizes for validating the analytic expression.
    """
    mu = check_rate_weights(mu, channels.K)
    H = channels.entries
    V = np.ascontiguousarray(precoders, dtype=np.complex128)
    G = np.zeros_like(V)
    for k in range(V.shape[0]):
        for i in range(V.shape[1]):
            for j in range(V.shape[2]):
                for part, unit in ((0, 1.0), (1, 1j)):
                    Vp = V.copy()
                    Vm = V.copy()
                    Vp[k, i, j] += step * unit
                    Vm[k, i, j] -= step * unit
                    df = (
                        _k.weighted_rate_sum(H, Vp, mu, 0.0)
                        - _k.weighted_rate_sum(H, Vm, mu, 0.0)
                    ) / (2.0 * step)
                    if part == 0:
                        G[k, i, j] += df / 2.0
                    else:
                        G[k, i, j] += 1j * df / 2.0
    return G


def _project_power(V: np.ndarray, constraint: PowerConstraint) -> np.ndarray:
    """Radial projection onto the power constraint surface."""
    if isinstance(constraint, SumPower):
        p = _k.total_power(V)
        if p <= 0.0:
            return V
        return V * np.sqrt(constraint.total / p)
    out = V.copy()
    budgets = constraint.budgets
    for k in range(V.shape[0]):
        p = float(np.sum(np.abs(V[k]) ** 2))
        if p > 0.0:
            out[k] = V[k] * np.sqrt(budgets[k] / p)
    return out


def projected_gradient_wsr(
    channels: ChannelSet,
    dims: NetworkDims,
    mu,
    constraint: PowerConstraint,
    config: Optional[GradientConfig] = None,
) -> Tuple[np.ndarray, OptimizerTrace]:
    """Projected gradient ascent on the weighted sum rate.

    Each outer step tries ``initial_step`` (grown after successes, shrunk
    after rejections) and halves until the projected candidate improves the
    objective; accepted iterates therefore never decrease it.  Stops when no
    halving helps or the improvement falls below epsilon.
    """
    config = config or GradientConfig()
    mu = check_rate_weights(mu, dims.K)
    _per_user_budgets(constraint, dims.K)  # validates budget count
    H = channels.entries

    V = initialize_precoders(channels, dims, constraint, "svd")
    V = _project_power(V, constraint)
    f = float(_k.weighted_rate_sum(H, V, mu, 0.0))
    rates = [f]
    step = config.initial_step
    converged = False
    iterations = 0
    for it in range(1, config.outer_iters + 1):
        if config.grad_mode == "analytic":
            G = _k.wsr_gradient(H, V, mu, 0.0)
        else:
            G = fd_wsr_gradient(channels, V, mu)
        if not np.all(np.isfinite(G.view(np.float64))):
            raise ArithmeticError("non-finite weighted sum-rate gradient")
        accepted = False
        t = step
        for _ in range(config.step_trials):
            cand = _project_power(V + t * G, constraint)
            fc = float(_k.weighted_rate_sum(H, cand, mu, 0.0))
            if fc > f:
                accepted = True
                break
            t *= config.shrink
        if not accepted:
            converged = True
            break
        gain = fc - f
        V, f = cand, fc
        rates.append(f)
        iterations = it
        step = min(t * 2.0, 1e6)
        if gain < config.epsilon:
            converged = True
            break

    trace = OptimizerTrace(
        rates=np.asarray(rates),
        converged=converged,
        iterations=iterations,
        best_index=len(rates) - 1,
        lambdas=None,
        clamp_count=0,
        power_residuals=np.asarray([]),
    )
    return V, trace
