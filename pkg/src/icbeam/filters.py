r"""Single-shot transceiver operations for the perfect-CSI design.

These are the building blocks of the alternating optimization: MMSE receive
filters, error covariances, rate/MSE conversions, and the two flavours of
weighted-MMSE precoder update (total power across sources, or one budget
per source).  Each works on one snapshot of (channels, precoders,
receivers, weights); the iteration logic lives in :mod:`icbeam.optimizer`.

The receive covariance of user k is

    J_k = I_N + sum_i H_ki V_i V_i^H H_ki^H,

split as J_k = Phi_k + H_kk V_k V_k^H H_kk^H with Phi_k the
interference-plus-noise part.  The d x d MSE matrix of the MMSE receiver is

    E_k = I_d - V_k^H H_kk^H J_k^{-1} H_kk V_k,

whose determinant identity det E_k = det Phi_k / det J_k gives the user
rate R_k = log2 det(E_k^{-1}).
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from . import _kernels as _k
from .channel import ChannelSet, SeedLike, _generator, complex_gaussian


class DegenerateInputError(RuntimeError):
    """A precoder update whose target is identically zero (for instance all
    receive filters vanish), so no scaled or power-constrained solution
    exists."""


@dataclass(frozen=True)
class SumPower:
    """One power budget shared by all K sources: sum_k Tr(V_k V_k^H) = total."""

    total: float

    def __post_init__(self):
        if not self.total > 0:
            raise ValueError(f"total power must be > 0, got {self.total}")


@dataclass(frozen=True)
class PerNodePower:
    """Individual budgets Tr(V_k V_k^H) <= budgets[k]."""

    budgets: np.ndarray

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.budgets, dtype=np.float64))
        if b.ndim != 1 or b.size < 1:
            raise ValueError("budgets must be a 1-D vector")
        if not np.all(b > 0):
            raise ValueError("every per-node budget must be > 0")
        object.__setattr__(self, "budgets", b)


PowerConstraint = Union[SumPower, PerNodePower]


@dataclass
class TransceiverState:
    """One iterate of the alternating design: (V, U, W) for all users."""

    precoders: np.ndarray   # (K, M, d)
    receivers: np.ndarray   # (K, d, N)
    weights: np.ndarray     # (K, d, d)

    def __post_init__(self):
        V, U, W = self.precoders, self.receivers, self.weights
        if V.ndim != 3 or U.ndim != 3 or W.ndim != 3:
            raise ValueError("precoders/receivers/weights must be 3-D stacks")
        K, M, d = V.shape
        if U.shape[0] != K or U.shape[1] != d or W.shape != (K, d, d):
            raise ValueError(
                f"inconsistent stack shapes V{V.shape} U{U.shape} W{W.shape}"
            )


def check_rate_weights(mu, K: int) -> np.ndarray:
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (K,):
        raise ValueError(f"mu must have shape ({K},), got {mu.shape}")
    if not np.all(mu > 0):
        raise ValueError("all rate weights mu_k must be > 0")
    return mu


def interference_cov(channels: ChannelSet, precoders: np.ndarray, k: int) -> np.ndarray:
    """Interference-plus-noise covariance Phi_k at destination k."""
    return _k.interference_cov_single(channels.entries, precoders, k, 0.0)


def mmse_receiver(channels: ChannelSet, precoders: np.ndarray, k: int) -> np.ndarray:
    """Linear MMSE receive filter U_k = V_k^H H_kk^H J_k^{-1}  (d x N)."""
    U, _ = _k.receivers_and_errors(channels.entries, precoders, 0.0)
    return U[k]


def error_covariance(channels: ChannelSet, precoders: np.ndarray, k: int) -> np.ndarray:
    """MMSE error covariance E_k (d x d, Hermitian, 0 < E_k <= I)."""
    _, E = _k.receivers_and_errors(channels.entries, precoders, 0.0)
    return E[k]


def mse_matrix(
    channels: ChannelSet,
    precoders: np.ndarray,
    receivers: np.ndarray,
    k: int,
) -> np.ndarray:
    """MSE matrix of user k under an arbitrary (not necessarily MMSE)
    receive filter: E[(U y - s)(U y - s)^H] for unit-power streams."""
    H = channels.entries
    U = receivers[k]
    A = U @ (H[k, k] @ precoders[k])
    E = (np.eye(A.shape[0], dtype=np.complex128) - A) @ (
        np.eye(A.shape[0], dtype=np.complex128) - A
    ).conj().T
    for i in range(channels.K):
        if i != k:
            B = U @ (H[k, i] @ precoders[i])
            E = E + B @ B.conj().T
    E = E + U @ U.conj().T
    return 0.5 * (E + E.conj().T)


def empirical_mse(
    channels: ChannelSet,
    precoders: np.ndarray,
    receivers: np.ndarray,
    k: int,
    num_samples: int = 20000,
    seed: SeedLike = 0,
) -> float:
    """Monte Carlo estimate of user k's total MSE sum_j E|shat_j - s_j|^2.

    Draws unit-variance circular Gaussian symbols for every stream of every
    user plus CN(0, I) receiver noise, runs them through the channel and the
    fixed receive filter.  Sanity tool for the analytic expressions.
    """
    H = channels.entries
    K = channels.K
    d = precoders.shape[2]
    rng = _generator(seed)
    U = receivers[k]
    s_own = complex_gaussian(rng, (num_samples, d), 1.0)
    y = s_own @ (H[k, k] @ precoders[k]).T
    for i in range(K):
        if i != k:
            s_i = complex_gaussian(rng, (num_samples, d), 1.0)
            y = y + s_i @ (H[k, i] @ precoders[i]).T
    y = y + complex_gaussian(rng, (num_samples, H.shape[2]), 1.0)
    shat = y @ U.T
    err = shat - s_own
    return float(np.mean(np.sum(np.abs(err) ** 2, axis=1)))


def achievable_rate(channels: ChannelSet, precoders: np.ndarray, k: int) -> float:
    """User k's rate log2 det(I + Phi_k^{-1} H_kk V_k V_k^H H_kk^H) in bits."""
    return float(_k.rates_bits(channels.entries, precoders, 0.0)[k])


def rate_from_error(error: np.ndarray, base: float = 2.0) -> float:
    """Rate via the duality R_k = -log_base det(E_k).

    Rejects inputs that are not Hermitian positive definite.
    """
    E = np.asarray(error)
    if E.ndim != 2 or E.shape[0] != E.shape[1]:
        raise ValueError(f"error matrix must be square, got {E.shape}")
    if not np.allclose(E, E.conj().T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(E).max())):
        raise ValueError("error matrix must be Hermitian")
    try:
        L = np.linalg.cholesky(E)
    except np.linalg.LinAlgError as exc:
        raise ValueError("error matrix must be positive definite") from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(L).real)))
    return -logdet / np.log(base)


def mse_weights(errors: np.ndarray, mu) -> np.ndarray:
    """Rate-optimal MSE weights W_k = (mu_k / ln 2) E_k^{-1}."""
    E = np.asarray(errors, dtype=np.complex128)
    mu = check_rate_weights(mu, E.shape[0])
    try:
        return _k.weights_from_errors(np.ascontiguousarray(E), mu)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular error covariance has no MSE weight") from exc


def wmse_objective(
    channels: ChannelSet,
    precoders: np.ndarray,
    receivers: np.ndarray,
    weights: np.ndarray,
) -> float:
    """Weighted sum-MSE sum_k Re Tr(W_k E_k(U, V)) at fixed filters."""
    total = 0.0
    for k in range(channels.K):
        E = mse_matrix(channels, precoders, receivers, k)
        total += float(np.trace(weights[k] @ E).real)
    return total


def sum_power_precoders(
    channels: ChannelSet,
    receivers: np.ndarray,
    weights: np.ndarray,
    total_power: float,
    extra_loading: float = 0.0,
) -> Tuple[np.ndarray, float]:
    """Weighted-MMSE precoder update under the shared power budget.

    Solves the relaxed problem with the closed-form water level
    alpha = sum_i Tr(W_i U_i U_i^H) / P_T, then rescales the stack by beta
    so the budget holds with equality.  Returns (precoders, beta).
    """
    if not total_power > 0:
        raise ValueError(f"total power must be > 0, got {total_power}")
    H = channels.entries
    t = _k.trace_wuu(receivers, weights)
    if t <= 0.0:
        raise DegenerateInputError(
            "all receive filters vanish; precoder target is zero"
        )
    alpha = t / total_power + extra_loading
    Vp = _k.sum_power_update(H, receivers, weights, alpha)
    s = _k.total_power(Vp)
    if s <= 0.0:
        raise DegenerateInputError("zero unnormalised precoders, beta undefined")
    beta = float(np.sqrt(total_power / s))
    return beta * Vp, beta


def per_node_power(psi: np.ndarray, rhs: np.ndarray, lam: float) -> float:
    """Power Tr(V V^H) of the candidate V = (psi + lam I)^{-1} rhs.

    Strictly decreasing in lam >= 0 whenever rhs is nonzero, which is what
    makes the bisection in :func:`per_node_precoder` valid.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise ValueError(f"psi must be square, got {psi.shape}")
    scale = max(1.0, float(np.abs(psi).max()))
    if not np.allclose(psi, psi.conj().T, rtol=0.0, atol=1e-10 * scale):
        raise ValueError("psi must be Hermitian")
    if float(np.linalg.eigvalsh(psi).min()) < -1e-10 * scale:
        raise ValueError("psi must be positive semidefinite")
    rhs = np.ascontiguousarray(np.atleast_2d(rhs), dtype=np.complex128)
    sig, pdiag, _, _ = _k.power_profile(psi, rhs, 0.0)
    return float(_k.power_at(sig, pdiag, lam))


def per_node_precoder(
    channels: ChannelSet,
    receivers: np.ndarray,
    weights: np.ndarray,
    k: int,
    budget: float,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> Tuple[np.ndarray, float]:
    """Weighted-MMSE precoder of user k under its own power budget.

    V_k(lam) = (Psi_k + lam I)^{-1} H_kk^H U_k^H W_k with the multiplier
    found by bisection on the monotone power curve; lam clamps to 0 when the
    unconstrained solution is already inside the budget.  Returns (V_k, lam).
    """
    if not budget > 0:
        raise ValueError(f"budget must be > 0, got {budget}")
    H = channels.entries
    psi, rhs = _k.psi_and_rhs_single(H, receivers, weights, k)
    if float(np.sum(np.abs(rhs) ** 2)) == 0.0:
        raise DegenerateInputError(f"precoder target of user {k} is zero")
    V, lam, _, _ = _k.solve_power_constrained(psi, rhs, budget, 0.0, tol, max_iter)
    return V, float(lam)
