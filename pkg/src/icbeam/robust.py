r"""Imperfect-CSI (statistically robust) transceiver updates.

The designer only holds channel estimates Hhat = H - Delta with
i.i.d. CN(0, sigma_delta^2) estimation error on every entry.  Averaging the
MSE over Delta turns each update into its perfect-CSI counterpart computed
on Hhat plus an identity loading proportional to the error variance:

  * receiver side: the covariance gains sigma_delta^2 * sum_i Tr(V_i V_i^H) I_N,
  * transmit side: the precoder inverse gains sigma_delta^2 * sum_i Tr(U_i^H W_i U_i) I_M.

Setting sigma_delta^2 = 0 reproduces the nominal design exactly.  The
variance the designer assumes may itself be off; ``RobustContext`` carries
the assumed value, and the experiment harness decides what the true one is.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import _kernels as _k
from .channel import ChannelSet
from .filters import DegenerateInputError, check_rate_weights


@dataclass
class RobustContext:
    """Estimated channels plus the error variance the designer assumes."""

    estimated_channels: ChannelSet
    sigma_delta_sq: float

    def __post_init__(self):
        if self.sigma_delta_sq < 0:
            raise ValueError(
                f"sigma_delta_sq must be >= 0, got {self.sigma_delta_sq}"
            )


def _rx_loading(ctx: RobustContext, precoders: np.ndarray) -> float:
    return ctx.sigma_delta_sq * _k.total_power(precoders)


def robust_receiver(ctx: RobustContext, precoders: np.ndarray, k: int) -> np.ndarray:
    """Average-MSE-optimal receive filter on the estimated channels."""
    U, _ = _k.receivers_and_errors(
        ctx.estimated_channels.entries, precoders, _rx_loading(ctx, precoders)
    )
    return U[k]


def robust_error_covariance(
    ctx: RobustContext, precoders: np.ndarray, k: int
) -> np.ndarray:
    """Average error covariance Etilde_k under the estimation-error prior."""
    _, E = _k.receivers_and_errors(
        ctx.estimated_channels.entries, precoders, _rx_loading(ctx, precoders)
    )
    return E[k]


def robust_weights(ctx: RobustContext, precoders: np.ndarray, mu) -> np.ndarray:
    """Wtilde_k = (mu_k / ln 2) Etilde_k^{-1}."""
    mu = check_rate_weights(mu, ctx.estimated_channels.K)
    _, E = _k.receivers_and_errors(
        ctx.estimated_channels.entries, precoders, _rx_loading(ctx, precoders)
    )
    try:
        return _k.weights_from_errors(E, mu)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular average error covariance") from exc


def _tx_loading(ctx: RobustContext, receivers: np.ndarray, weights: np.ndarray) -> float:
    return ctx.sigma_delta_sq * _k.trace_wuu(receivers, weights)


def robust_sum_power_precoders(
    ctx: RobustContext,
    receivers: np.ndarray,
    weights: np.ndarray,
    total_power: float,
) -> Tuple[np.ndarray, float]:
    """Sum-power precoder update with the transmit-side error loading.

    Same closed form as the nominal update, with the inverse shifted by
    alpha = sum_i Tr(W_i U_i U_i^H)/P_T + sigma_delta^2 sum_i Tr(U_i^H W_i U_i),
    followed by the usual rescale to the budget.  Returns (precoders, beta).
    """
    if not total_power > 0:
        raise ValueError(f"total power must be > 0, got {total_power}")
    H = ctx.estimated_channels.entries
    t = _k.trace_wuu(receivers, weights)
    if t <= 0.0:
        raise DegenerateInputError(
            "all receive filters vanish; precoder target is zero"
        )
    alpha = t / total_power + ctx.sigma_delta_sq * t
    Vp = _k.sum_power_update(H, receivers, weights, alpha)
    s = _k.total_power(Vp)
    if s <= 0.0:
        raise DegenerateInputError("zero unnormalised precoders, beta undefined")
    beta = float(np.sqrt(total_power / s))
    return beta * Vp, beta


def robust_per_node_precoder(
    ctx: RobustContext,
    receivers: np.ndarray,
    weights: np.ndarray,
    k: int,
    budget: float,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> Tuple[np.ndarray, float]:
    """Per-node precoder update with the transmit-side error loading.

    The loading enters the same inverse as the power multiplier, so the
    bisection simply runs on (Psi_k + shift I + lam I) with
    shift = sigma_delta^2 sum_i Tr(U_i^H W_i U_i).  Returns (V_k, lam).
    """
    if not budget > 0:
        raise ValueError(f"budget must be > 0, got {budget}")
    H = ctx.estimated_channels.entries
    psi, rhs = _k.psi_and_rhs_single(H, receivers, weights, k)
    if float(np.sum(np.abs(rhs) ** 2)) == 0.0:
        raise DegenerateInputError(f"precoder target of user {k} is zero")
    shift = _tx_loading(ctx, receivers, weights)
    V, lam, _, _ = _k.solve_power_constrained(psi, rhs, budget, shift, tol, max_iter)
    return V, float(lam)
