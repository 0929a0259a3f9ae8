r"""Closed-form complexity and feedback models for the two design styles.

Operation counts are complex multiplications.  The per-stage costs of the
gradient-descent design (stages a.1 to a.5: init, outer-loop gradient,
inner step-size search, sum-rate evaluation, final filter extraction) and
of the alternating weighted-MMSE design (stages b.1 to b.7: init, the five
per-iteration updates with either the closed-form sum-power precoder or the
bisection-based per-node one, and the sum-rate evaluation) are polynomial
in the problem sizes and the loop counts.

Primitive costs (complex flops):

    inversion of an n x n matrix      (2/3) n^3
    SVD of an n x m matrix            7 n m^2 + 4 m^3
    Cholesky factor of an n x n       (1/3) n^3

Feedback sizes (complex scalars per transmit node, one transmission slot):
the gradient method needs global CSI once plus the other users' precoders
each outer iteration; the alternating methods need local CSI once plus the
receive filters and MSE weights each iteration (the sum-power variant also
shares one scalar for the power rebalancing).
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np


@dataclass(frozen=True)
class ComplexityParams:
    """Problem sizes plus loop counts.

    I1: outer iterations (both designs), I2: step-size trials per gradient
    step, I3: bisection steps of the per-node multiplier search.
    """

    K: int
    M: int
    N: int
    d: int
    I1: int = 10
    I2: int = 10
    I3: int = 10

    def __post_init__(self):
        for name in ("K", "M", "N", "d", "I1", "I2", "I3"):
            v = getattr(self, name)
            if v < 1:
                raise ValueError(f"{name} must be >= 1, got {v}")
        if self.d > min(self.M, self.N):
            raise ValueError(f"d={self.d} exceeds min(M, N)")


def inversion_cost(n: int) -> float:
    return (2.0 / 3.0) * n**3


def svd_cost(n: int, m: int) -> float:
    return 7.0 * n * m**2 + 4.0 * m**3


def cholesky_cost(n: int) -> float:
    return (1.0 / 3.0) * n**3


def _rate_eval_cost(p: ComplexityParams) -> float:
    """One weighted-sum-rate evaluation from scratch (shared by both designs)."""
    K, M, N, d = p.K, p.M, p.N, p.d
    return (
        K * (M**2 * d + 1)
        + K * (K - 1) * (1 + 2 * M * N * d + N**2 * d)
        + K * (2 + 2 * M * N * d + N**2 * d + N**3 + inversion_cost(N))
    )


def gradient_stage_costs(p: ComplexityParams) -> Dict[str, float]:
    """Complex multiplications per stage of the gradient-descent design."""
    K, M, N, d = p.K, p.M, p.N, p.d
    c1N = inversion_cost(N)
    stages = {
        "a.1": _rate_eval_cost(p),
        "a.2": p.I1
        * (
            K * (2 * K - 1) * (1 + 2 * M * N * d + N**2 * d)
            + K
            * (2 * K - 1)
            * (9 + 2 * c1N + 2 * M * N**2 + 2 * M**2 * N + 2 * M**2 * d + M * d**2)
        ),
        "a.3": p.I1
        * (
            K * p.I2 * (p.I2 + 1) / 2.0
            + K
            * p.I2
            * (
                2 * K * (K - 1) * (1 + 2 * M * N * d + N**2 * d)
                + 2 * K * (2 + 2 * M * N * d + N**2 * d + N**3 + c1N)
                + K * (M**2 * d + 1)
                + 2
                + M * d**2
            )
        ),
        "a.4": p.I1 * _rate_eval_cost(p),
        "a.5": (
            K * (1 + 2 * M * d + 2 * M**2 * d + svd_cost(M, d))
            + K * (K - 1) * (2 * M * N * d + N**2 * d)
            + K
            * (
                2 * M * N * d
                + 2 * N**2 * d
                + 4 * N * d**2
                + M * d**2
                + d**3
                + c1N
                + cholesky_cost(d)
                + 2 * svd_cost(d, d)
            )
        ),
    }
    return stages


def wmmse_stage_costs(p: ComplexityParams, constraint: str = "sum") -> Dict[str, float]:
    """Complex multiplications per stage of the alternating design.

    constraint 'sum' uses the closed-form precoder stage (b.6-1); 'pernode'
    pays for the bisection search instead (b.6-2).
    """
    if constraint not in ("sum", "pernode"):
        raise ValueError(f"constraint must be 'sum' or 'pernode', got {constraint!r}")
    K, M, N, d = p.K, p.M, p.N, p.d
    c1N = inversion_cost(N)
    c1M = inversion_cost(M)
    c1d = inversion_cost(d)
    stages = {
        "b.1": _rate_eval_cost(p),
        "b.2": p.I1 * K * (K - 1) * (1 + 2 * M * N * d + N**2 * d),
        "b.3": p.I1 * K * (3 * M * N * d + 2 * N**2 * d + c1N),
        "b.4": p.I1 * K * (2 * M * N * d + N**2 * d + N * d**2 + c1N + c1d),
        "b.5": p.I1 * K * c1d,
        "b.7": p.I1 * _rate_eval_cost(p),
    }
    if constraint == "sum":
        stages["b.6-1"] = p.I1 * (
            K * (K - 1) * (2 * N * M * d + M * d**2 + M**2 * d)
            + K * (N * d**2 + d**3)
            + K * (3 * M * N * d + 2 * M * d**2 + M**2 * d + 1 + c1M)
            + K * (M**2 * d + M * d)
        )
    else:
        stages["b.6-2"] = p.I1 * (
            K * (K - 1) * (2 * N * M * d + M * d**2 + M**2 * d)
            + p.I3 * K * M**2 * d
            + (p.I3 + 1) * K * (3 * M * N * d + 2 * M * d**2 + M**2 * d + 1 + c1M)
        )
    return stages


def total_multiplications(p: ComplexityParams, method: str) -> float:
    """Whole-run complex-multiplication count for one design method.

    method is 'gradient', 'wmmse_sum' or 'wmmse_pernode'.
    """
    if method == "gradient":
        return float(sum(gradient_stage_costs(p).values()))
    if method == "wmmse_sum":
        return float(sum(wmmse_stage_costs(p, "sum").values()))
    if method == "wmmse_pernode":
        return float(sum(wmmse_stage_costs(p, "pernode").values()))
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class FeedbackAmounts:
    """Complex scalars fed back to one transmit node per transmission slot."""

    gradient: float
    wmmse_pernode: float
    wmmse_sum: float


def feedback_amounts(p: ComplexityParams) -> FeedbackAmounts:
    """CSI-plus-coefficient feedback of the three schemes.

    gradient:        global CSI MNK^2 once + precoders Md(K-1) per iteration
    wmmse per-node:  local CSI MNK once + (Md + d^2)K coefficients per iteration
    wmmse sum-power: the same plus one scalar per iteration
    """
    K, M, N, d = p.K, p.M, p.N, p.d
    grad = M * N * K**2 + M * d * (K - 1) * p.I1
    pernode = M * N * K + (M * d + d**2) * K * p.I1
    sump = M * N * K + ((M * d + d**2) * K + 1) * p.I1
    return FeedbackAmounts(float(grad), float(pernode), float(sump))


def feedback_crossover(
    M: int, N: int, d: int, I1: int = 10, k_max: int = 64
) -> int:
    """Smallest K* such that both alternating designs need less feedback
    than the gradient design for every K >= K*.

    Exists because global CSI grows like K^2 against K for local CSI.
    """
    best = None
    for K in range(1, k_max + 1):
        fb = feedback_amounts(ComplexityParams(K, M, N, d, I1=I1))
        if fb.wmmse_pernode < fb.gradient and fb.wmmse_sum < fb.gradient:
            if best is None:
                best = K
        else:
            best = None
    if best is None:
        raise ValueError(f"no feedback crossover found for K <= {k_max}")
    return best
