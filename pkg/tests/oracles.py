"""Independent reference implementations used by the tests.

Nothing here imports the package's solvers or moment code; only the data
containers are shared.
"""

import numpy as np


def eigen_svt(A, tau):
    """Singular value soft-thresholding through the eigendecomposition of A^T A.

    With A^T A = V diag(s^2) V^T, S_tau(A) = A V diag((1 - tau/s)_+) V^T.
    """
    A = np.asarray(A, dtype=float)
    w, V = np.linalg.eigh(A.T @ A)
    s = np.sqrt(np.clip(w, 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(s > tau, 1.0 - tau / np.where(s > 0, s, 1.0), 0.0)
    return A @ V @ np.diag(f) @ V.T


def nuclear(A):
    return float(np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False).sum())


def prox_conditions(A, Z, tau):
    """Optimality residuals of Z = argmin 1/2 ||Z - A||^2 + tau ||Z||_*.

    Returns ``(excess, gap)``: ``excess = max(0, ||A - Z||_op - tau)`` and
    ``gap = |<A - Z, Z> - tau ||Z||_*|``. Both vanish exactly at the prox.
    """
    G = np.asarray(A) - np.asarray(Z)
    op = np.linalg.norm(G, 2) if G.size else 0.0
    return max(0.0, op - tau), abs(float(np.sum(G * Z)) - tau * nuclear(Z))


def naive_svt_by_loop(A, tau):
    """Sum of rank-one terms (s_i - tau)_+ u_i v_i^T."""
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    out = np.zeros_like(np.asarray(A, dtype=float))
    for i in range(len(s)):
        if s[i] > tau:
            out += (s[i] - tau) * np.outer(U[:, i], Vt[i])
    return out


def fista(grad, lipschitz, prox, x0, iters=20000, objective=None, tol=0.0):
    """Accelerated proximal gradient with function-value restarts."""
    x = np.array(x0, dtype=float)
    y = x.copy()
    t = 1.0
    step = 1.0 / lipschitz
    f_old = objective(x) if objective is not None else None
    for _ in range(iters):
        x_new = prox(y - step * grad(y), step)
        if objective is not None:
            f_new = objective(x_new)
            if f_new > f_old:
                if t == 1.0:
                    # a plain proximal step no longer descends: rounding floor
                    break
                # restart momentum
                y, t = x.copy(), 1.0
                continue
            f_old = f_new
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        if tol and np.linalg.norm(x_new - x) <= tol:
            x = x_new
            break
        x, t = x_new, t_new
    return x


def ls_nuclear_reference(A, Y, shape, lam, iters=50000, tol=1e-13):
    """Minimize (1/N)||Y - A theta||^2 + lam ||mat(theta)||_* by FISTA.

    ``A`` rows are column-major vectorisations; ``Y`` may be a matrix, in
    which case ``theta`` is the d1 x d2 coefficient matrix itself.
    """
    A = np.asarray(A, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = A.shape[0]
    L = 2.0 * np.linalg.norm(A, 2) ** 2 / n
    is_vec = Y.ndim == 1

    def to_mat(t):
        return t.reshape(shape, order="F") if is_vec else t

    def from_mat(M):
        return M.reshape(-1, order="F") if is_vec else M

    def grad(t):
        return -(2.0 / n) * (A.T @ (Y - A @ t))

    def prox(t, step):
        return from_mat(naive_svt_by_loop(to_mat(t), lam * step))

    def obj(t):
        r = Y - A @ t
        return float(np.sum(r * r) / n + lam * nuclear(to_mat(t)))

    x0 = np.zeros(A.shape[1]) if is_vec else np.zeros(shape)
    x = fista(grad, L, prox, x0, iters, obj, tol=tol)
    return to_mat(x), obj(x)


def lasso_reference(G, c, lam, iters=50000):
    """Minimize -c^T t + 1/2 t^T G t + lam ||t||_1 by FISTA."""
    G = np.asarray(G, dtype=float)
    c = np.asarray(c, dtype=float)
    L = max(np.linalg.eigvalsh(G).max(), 1e-12)

    def obj(t):
        return float(-c @ t + 0.5 * t @ G @ t + lam * np.abs(t).sum())

    def prox(t, step):
        return np.sign(t) * np.maximum(np.abs(t) - lam * step, 0.0)

    x = fista(lambda t: G @ t - c, L, prox, np.zeros(len(c)), iters, obj, tol=1e-14)
    return x, obj(x)


def mc_reference(cross, gdiag, lam, box):
    """Box-constrained matrix completion objective minimized by cvxpy.

    Minimizes sum(g * T^2 - 2 c * T) + lam ||T||_* subject to |T| <= box.
    """
    import cvxpy as cp

    T = cp.Variable(cross.shape)
    obj = cp.sum(cp.multiply(gdiag, cp.square(T)) - 2 * cp.multiply(cross, T))
    obj = obj + lam * cp.normNuc(T)
    cons = [cp.abs(T) <= box] if np.isfinite(box) else []
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200000)
    return T.value, prob.value


def naive_moments(designs, responses):
    """Loop-based (1/N) sum Y_i vec(X_i) and (1/N) sum vec(X_i) vec(X_i)^T."""
    N = len(responses)
    p = designs[0].size
    cross = np.zeros(p)
    gram = np.zeros((p, p))
    for X, y in zip(designs, responses):
        v = np.asarray(X, dtype=float).flatten(order="F")
        cross += y * v
        gram += np.outer(v, v)
    return cross / N, gram / N


def clip_scalar(y, tau):
    return float(np.sign(y) * min(abs(y), tau))


def naive_shrink(x, tau, order):
    x = np.asarray(x, dtype=float)
    norm = sum(abs(v) ** order for v in x) ** (1.0 / order)
    if norm <= tau or norm == 0:
        return x.copy()
    return x * (tau / norm)


def naive_outer_mean(rows):
    rows = [np.asarray(r, dtype=float) for r in rows]
    out = np.zeros((len(rows[0]), len(rows[0])))
    for r in rows:
        out += np.outer(r, r)
    return out / len(rows)


def eig_clip_psd(M):
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    return (V * np.clip(w, 0, None)) @ V.T
