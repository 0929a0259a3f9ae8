"""Low-level numeric kernels shared by the transceiver updates.

Everything here is written against the numba-supported numpy subset and is
JIT-compiled when the numba backend is active (see :mod:`icbeam.backend`).
Array conventions, used consistently across the package:

    H   (K, K, N, M) complex128   channel grid, H[j, i] = link source i -> dest j
    V   (K, M, d)    complex128   transmit precoders
    U   (K, d, N)    complex128   receive filters
    W   (K, d, d)    complex128   MSE weights
    mu  (K,)         float64      rate weights

``load`` is the identity loading that imperfect-CSI designs add to the
noise-plus-interference term (sigma_delta^2 * sum_i Tr(V_i V_i^H)); the
perfect-CSI path always passes 0.0.  The noise floor is fixed at 1.
"""

import numpy as np

from .backend import jit

_LN2 = 0.6931471805599453


@jit
def hconj(a):
    """Conjugate transpose into a fresh C-contiguous array."""
    m, n = a.shape
    out = np.empty((n, m), dtype=a.dtype)
    for i in range(n):
        for j in range(m):
            out[i, j] = np.conj(a[j, i])
    return out


@jit
def hermitian_part(a):
    n = a.shape[0]
    out = np.empty((n, n), dtype=a.dtype)
    for i in range(n):
        for j in range(n):
            out[i, j] = 0.5 * (a[i, j] + np.conj(a[j, i]))
    return out


@jit
def trace_real(a):
    t = 0.0
    for i in range(a.shape[0]):
        t += a[i, i].real
    return t


@jit
def logdet_hpd(a):
    """log-determinant of a Hermitian positive definite matrix via Cholesky."""
    c = np.linalg.cholesky(a)
    s = 0.0
    for i in range(c.shape[0]):
        s += np.log(c[i, i].real)
    return 2.0 * s


@jit
def total_power(V):
    """sum_k Tr(V_k V_k^H)."""
    K, M, d = V.shape
    p = 0.0
    for k in range(K):
        for i in range(M):
            for j in range(d):
                v = V[k, i, j]
                p += (v * np.conj(v)).real
    return p


@jit
def interference_cov_single(H, V, k, load):
    """Phi_k = (1 + load) I_N + sum_{i != k} H_ki V_i V_i^H H_ki^H."""
    K = H.shape[0]
    N = H.shape[2]
    out = np.zeros((N, N), dtype=np.complex128)
    for i in range(N):
        out[i, i] = 1.0 + load
    for i in range(K):
        if i != k:
            G = H[k, i] @ V[i]
            out += G @ hconj(G)
    return hermitian_part(out)


@jit
def receivers_and_errors(H, V, load):
    """MMSE receive filters and d x d error covariances for every user.

    U_k = V_k^H H_kk^H J_k^{-1} with J_k the full receive covariance, and
    E_k = I_d - U_k H_kk V_k, which for the MMSE choice of U_k equals the
    error covariance (I_d + V^H H^H Phi^{-1} H V)^{-1}.
    """
    K = H.shape[0]
    N = H.shape[2]
    d = V.shape[2]
    U = np.empty((K, d, N), dtype=np.complex128)
    E = np.empty((K, d, d), dtype=np.complex128)
    for k in range(K):
        Phi = interference_cov_single(H, V, k, load)
        G = H[k, k] @ V[k]
        J = hermitian_part(Phi + G @ hconj(G))
        X = np.linalg.solve(J, G)  # J^{-1} H_kk V_k
        Uk = hconj(X)
        U[k] = Uk
        Ek = -(Uk @ G)
        for i in range(d):
            Ek[i, i] += 1.0
        E[k] = hermitian_part(Ek)
    return U, E


@jit
def weights_from_errors(E, mu):
    """W_k = (mu_k / ln 2) E_k^{-1}, Hermitian-symmetrised."""
    K, d, _ = E.shape
    W = np.empty((K, d, d), dtype=np.complex128)
    for k in range(K):
        W[k] = hermitian_part(np.linalg.inv(E[k])) * (mu[k] / _LN2)
    return W


@jit
def rates_bits(H, V, load):
    """Per-user rates log2 det(I + Phi_k^{-1} H_kk V_k V_k^H H_kk^H)."""
    K = H.shape[0]
    out = np.empty(K, dtype=np.float64)
    for k in range(K):
        Phi = interference_cov_single(H, V, k, load)
        G = H[k, k] @ V[k]
        J = hermitian_part(Phi + G @ hconj(G))
        out[k] = (logdet_hpd(J) - logdet_hpd(Phi)) / _LN2
    return out


@jit
def weighted_rate_sum(H, V, mu, load):
    r = rates_bits(H, V, load)
    s = 0.0
    for k in range(mu.shape[0]):
        s += mu[k] * r[k]
    return s


@jit
def trace_wuu(U, W):
    """sum_i Tr(W_i U_i U_i^H), which also equals sum_i Tr(U_i^H W_i U_i)."""
    t = 0.0
    for i in range(U.shape[0]):
        t += trace_real(W[i] @ U[i] @ hconj(U[i]))
    return t


@jit
def psi_and_rhs_single(H, U, W, k):
    """Quadratic term Psi_k = sum_i H_ik^H U_i^H W_i U_i H_ik and the
    linear target H_kk^H U_k^H W_k of user k's precoder update."""
    K = H.shape[0]
    M = H.shape[3]
    Psi = np.zeros((M, M), dtype=np.complex128)
    for i in range(K):
        UH = U[i] @ H[i, k]          # d x M
        Psi += hconj(UH) @ (W[i] @ UH)
    rhs = hconj(U[k] @ H[k, k]) @ W[k]   # M x d
    return hermitian_part(Psi), rhs


@jit
def sum_power_update(H, U, W, alpha):
    """Unnormalised precoders (Psi_k + alpha I_M)^{-1} H_kk^H U_k^H W_k.

    alpha folds together the water-level term sum_i Tr(W_i U_i U_i^H) / P_T
    and, for robust designs, the channel-error loading.
    """
    K = H.shape[0]
    M = H.shape[3]
    d = U.shape[1]
    Vp = np.empty((K, M, d), dtype=np.complex128)
    for k in range(K):
        Psi, rhs = psi_and_rhs_single(H, U, W, k)
        for i in range(M):
            Psi[i, i] += alpha
        Vp[k] = np.linalg.solve(Psi, rhs)
    return Vp


@jit
def power_profile(psi, rhs, shift):
    """Eigen-domain data for evaluating Tr(V(lam) V(lam)^H) cheaply.

    With psi + shift I = Q diag(sig) Q^H and Y = Q^H rhs, the candidate
    precoder is V(lam) = Q diag(1/(sig+lam)) Y and its power is
    sum_i pdiag_i / (sig_i + lam)^2 with pdiag_i the squared row norms of
    Y.  Rows whose energy sits at round-off level relative to the whole
    target are zeroed so that a numerical null space of psi cannot fake a
    pole at lam = 0.
    """
    M = psi.shape[0]
    d = rhs.shape[1]
    w, Q = np.linalg.eigh(hermitian_part(psi))
    Y = hconj(Q) @ rhs
    pdiag = np.empty(M, dtype=np.float64)
    tot = 0.0
    for i in range(M):
        s = 0.0
        for j in range(d):
            y = Y[i, j]
            s += (y * np.conj(y)).real
        pdiag[i] = s
        tot += s
    thr = tot * 1e-14
    for i in range(M):
        if pdiag[i] <= thr:
            pdiag[i] = 0.0
            for j in range(d):
                Y[i, j] = 0.0
    sig = np.empty(M, dtype=np.float64)
    for i in range(M):
        s = w[i]
        if s < 0.0:
            s = 0.0
        sig[i] = s + shift
    return sig, pdiag, Q, Y


@jit
def power_at(sig, pdiag, lam):
    """Transmit power of the candidate precoder at multiplier lam."""
    p = 0.0
    for i in range(sig.shape[0]):
        den = sig[i] + lam
        if den <= 0.0:
            if pdiag[i] > 0.0:
                return np.inf
        else:
            p += pdiag[i] / (den * den)
    return p


@jit
def precoder_at(sig, Q, Y, lam):
    M, d = Y.shape
    Z = np.empty((M, d), dtype=np.complex128)
    for i in range(M):
        den = sig[i] + lam
        for j in range(d):
            if den <= 0.0:
                Z[i, j] = 0.0
            else:
                Z[i, j] = Y[i, j] / den
    return Q @ Z


@jit
def solve_power_constrained(psi, rhs, budget, shift, tol, max_iter):
    """Bisection in lam >= 0 for Tr(V V^H) = budget.

    The power is strictly decreasing in lam wherever the target is nonzero,
    so a plain bracket-and-halve search converges.  Returns
    (V, lam, power, status) with status 0 when the budget was met within
    the relative tolerance, 1 when even lam = 0 leaves power below budget
    (the multiplier is clamped), and 2 when the target is identically zero.
    """
    sig, pdiag, Q, Y = power_profile(psi, rhs, shift)
    M = psi.shape[0]
    d = rhs.shape[1]
    tot = 0.0
    for i in range(M):
        tot += pdiag[i]
    if tot <= 0.0:
        return np.zeros((M, d), dtype=np.complex128), 0.0, 0.0, 2
    p0 = power_at(sig, pdiag, 0.0)
    if p0 <= budget:
        V = precoder_at(sig, Q, Y, 0.0)
        status = 0
        if p0 < budget * (1.0 - tol):
            status = 1
        return V, 0.0, p0, status
    lo = 0.0
    hi = 1.0
    guard = 0
    while power_at(sig, pdiag, hi) > budget and guard < 600:
        lo = hi
        hi *= 2.0
        guard += 1
    lam = hi
    p = power_at(sig, pdiag, lam)
    for _ in range(max_iter):
        lam = 0.5 * (lo + hi)
        p = power_at(sig, pdiag, lam)
        if abs(p - budget) <= tol * budget:
            break
        if p > budget:
            lo = lam
        else:
            hi = lam
    V = precoder_at(sig, Q, Y, lam)
    return V, lam, p, 0


@jit
def per_node_update(H, U, W, budgets, shift, tol, max_iter):
    """Per-user power-constrained precoder updates for all K users."""
    K = H.shape[0]
    M = H.shape[3]
    d = U.shape[1]
    V = np.empty((K, M, d), dtype=np.complex128)
    lams = np.empty(K, dtype=np.float64)
    powers = np.empty(K, dtype=np.float64)
    status = np.empty(K, dtype=np.int64)
    for k in range(K):
        Psi, rhs = psi_and_rhs_single(H, U, W, k)
        Vk, lam, p, st = solve_power_constrained(
            Psi, rhs, budgets[k], shift, tol, max_iter
        )
        V[k] = Vk
        lams[k] = lam
        powers[k] = p
        status[k] = st
    return V, lams, powers, status


@jit
def wsr_gradient(H, V, mu, load):
    """Conjugate Wirtinger derivative of the weighted sum rate w.r.t. each V_j.

    grad_j = (1/ln2) sum_k mu_k H_kj^H J_k^{-1} H_kj V_j
             - (1/ln2) sum_{k != j} mu_k H_kj^H Phi_k^{-1} H_kj V_j
    """
    K = H.shape[0]
    N = H.shape[2]
    M = H.shape[3]
    d = V.shape[2]
    Jinv = np.empty((K, N, N), dtype=np.complex128)
    Pinv = np.empty((K, N, N), dtype=np.complex128)
    for k in range(K):
        Phi = interference_cov_single(H, V, k, load)
        G = H[k, k] @ V[k]
        J = hermitian_part(Phi + G @ hconj(G))
        Jinv[k] = np.linalg.inv(J)
        Pinv[k] = np.linalg.inv(Phi)
    grad = np.zeros((K, M, d), dtype=np.complex128)
    for j in range(K):
        for k in range(K):
            Hkj = H[k, j]
            HV = Hkj @ V[j]
            term = hconj(Hkj) @ (Jinv[k] @ HV)
            if k != j:
                term = term - hconj(Hkj) @ (Pinv[k] @ HV)
            grad[j] += (mu[k] / _LN2) * term
    return grad
