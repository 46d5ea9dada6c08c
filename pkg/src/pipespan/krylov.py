"""Compressed-sparse-row matrices and plain/pipelined Krylov solvers.

The pipelined variants are algebraic rearrangements of their classical
counterparts: they produce the same iterates in exact arithmetic but
loosen the data dependencies so that, on a parallel machine, the global
reductions could overlap the sparse matrix-vector product. Here everything
runs single-threaded at desk scale; what the solvers expose instead is the
reduction structure itself, via instrumentation counters that record how
many reduction events and matrix applications each algorithm needs.

Counter semantics: ``spmv_count`` counts every matrix application including
the initial residual; ``reduction_count`` counts reduction events, where dot
products that the algorithm can evaluate in one combined reduction (the
pipelined variants' whole point) count as a single event, while the
orthogonalization dots of modified Gram-Schmidt are sequential and count
one by one. Norms of the right-hand side taken purely for reporting are
not counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "BreakdownError",
    "SparseMatrix",
    "KrylovWorkspace",
    "SolveReport",
    "laplacian_1d",
    "diagonal",
    "spmv",
    "gmres",
    "pgmres",
    "cg",
    "pipecg",
    "save_csr_text",
    "load_csr_text",
]

# Subdiagonal entries below this times ||A||_F are treated as breakdown.
BREAKDOWN_RTOL = 1e-14


class BreakdownError(RuntimeError):
    """The recurrence divided by a vanishing quantity at the given step."""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} (step {step})")


class SparseMatrix:
    """Square matrix in compressed sparse row form."""

    __slots__ = ("n", "indptr", "indices", "data", "_rows", "_frob")

    def __init__(self, n: int, indptr, indices, data):
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        data = np.asarray(data, dtype=float)
        if n < 1:
            raise ValueError("matrix dimension must be positive")
        if indptr.shape != (n + 1,) or indptr[0] != 0 or indptr[-1] != indices.size:
            raise ValueError("malformed row offsets")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("row offsets must be nondecreasing")
        if indices.shape != data.shape:
            raise ValueError("column indices and values must align")
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            raise ValueError("column index out of range")
        for row in range(n):
            cols = indices[indptr[row]:indptr[row + 1]]
            if cols.size > 1 and np.any(np.diff(cols) <= 0):
                raise ValueError(f"row {row} columns must be strictly increasing")
        self.n = int(n)
        self.indptr = indptr
        self.indices = indices
        self.data = data
        self._rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
        self._frob = float(np.sqrt(np.sum(data * data)))

    @property
    def nnz(self) -> int:
        return self.indices.size

    @property
    def frobenius_norm(self) -> float:
        return self._frob

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"vector length {x.shape} does not match dimension {self.n}")
        return np.bincount(self._rows, weights=self.data * x[self.indices],
                           minlength=self.n)

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self._rows, self.indices] = self.data
        return out

    @classmethod
    def from_dense(cls, dense) -> "SparseMatrix":
        dense = np.asarray(dense, dtype=float)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise ValueError("dense input must be square")
        rows, cols = np.nonzero(dense)
        order = np.lexsort((cols, rows))
        indptr = np.zeros(dense.shape[0] + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        return cls(dense.shape[0], np.cumsum(indptr), cols[order], dense[rows[order], cols[order]])


def laplacian_1d(n: int) -> SparseMatrix:
    """Tridiagonal second-difference matrix with stencil (-1, 2, -1)."""
    if n < 2:
        raise ValueError("laplacian_1d needs n >= 2")
    counts = np.full(n, 3, dtype=np.int64)
    counts[0] = counts[-1] = 2
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    data = np.empty(indptr[-1])
    pos = 0
    for row in range(n):
        if row > 0:
            indices[pos], data[pos] = row - 1, -1.0
            pos += 1
        indices[pos], data[pos] = row, 2.0
        pos += 1
        if row < n - 1:
            indices[pos], data[pos] = row + 1, -1.0
            pos += 1
    return SparseMatrix(n, indptr, indices, data)


def diagonal(values) -> SparseMatrix:
    values = np.asarray(values, dtype=float).ravel()
    n = values.size
    return SparseMatrix(n, np.arange(n + 1), np.arange(n), values)


def spmv(A: SparseMatrix, x) -> np.ndarray:
    """Matrix-vector product by CSR traversal."""
    return A.matvec(x)


def save_csr_text(A: SparseMatrix, path) -> None:
    """Write the plain-text CSR format: ``n nnz`` header, one row offset per
    line, then one column index per line, then one value per line."""
    lines = [f"{A.n} {A.nnz}"]
    lines += [str(int(v)) for v in A.indptr]
    lines += [str(int(c)) for c in A.indices]
    lines += [repr(float(v)) for v in A.data]
    Path(path).write_text("\n".join(lines) + "\n")


def load_csr_text(path) -> SparseMatrix:
    tokens = Path(path).read_text().split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: missing CSR header")
    n, nnz = int(tokens[0]), int(tokens[1])
    expected = 2 + (n + 1) + 2 * nnz
    if len(tokens) != expected:
        raise ValueError(f"{path}: expected {expected} tokens, found {len(tokens)}")
    pos = 2
    indptr = [int(t) for t in tokens[pos:pos + n + 1]]
    pos += n + 1
    indices = [int(t) for t in tokens[pos:pos + nnz]]
    pos += nnz
    data = [float(t) for t in tokens[pos:pos + nnz]]
    return SparseMatrix(n, indptr, indices, data)


@dataclass(frozen=True)
class KrylovWorkspace:
    """Orthonormal basis, Hessenberg matrix and any auxiliary basis of a solve."""

    basis: np.ndarray            # rows are the basis vectors actually used
    hessenberg: np.ndarray       # (k+1) x k upper Hessenberg
    aux_basis: np.ndarray | None = None
    residual_history: tuple[float, ...] = ()


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray
    iterations: int
    residual_history: tuple[float, ...]  # length iterations + 1, absolute norms
    final_relative_residual: float
    converged: bool
    method: str
    spmv_count: int
    reduction_count: int
    reductions_per_iteration: tuple[int, ...]
    breakdown_step: int | None = None
    workspace: KrylovWorkspace | None = None

    def to_dict(self) -> dict:
        """JSON-ready view (workspace arrays excluded)."""
        return {
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_relative_residual": self.final_relative_residual,
            "residual_history": list(self.residual_history),
            "spmv_count": self.spmv_count,
            "reduction_count": self.reduction_count,
            "reductions_per_iteration": list(self.reductions_per_iteration),
            "breakdown_step": self.breakdown_step,
            "solution": [float(v) for v in self.solution],
        }


def _start(A: SparseMatrix, b, x0):
    b = np.asarray(b, dtype=float)
    if b.shape != (A.n,):
        raise ValueError("right-hand side length does not match the matrix")
    if not np.any(b):
        raise ValueError("right-hand side must be nonzero")
    x0 = np.zeros(A.n) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x0.shape != (A.n,):
        raise ValueError("initial guess length does not match the matrix")
    return b, x0


def _givens(a: float, b: float) -> tuple[float, float, float]:
    r = math.hypot(a, b)
    if r == 0.0:
        return 1.0, 0.0, 0.0
    return a / r, b / r, r


class _LeastSquares:
    """Incremental Givens solve of min || H y - beta*e1 ||."""

    def __init__(self, m: int, beta: float):
        self.R = np.zeros((m + 2, m + 1))
        self.cs = np.zeros(m + 1)
        self.sn = np.zeros(m + 1)
        self.g = np.zeros(m + 2)
        self.g[0] = beta
        self.cols = 0

    def push(self, column) -> float:
        """Rotate in one Hessenberg column; returns the new residual norm."""
        k = self.cols
        col = np.asarray(column, dtype=float).copy()
        for j in range(k):
            t = self.cs[j] * col[j] + self.sn[j] * col[j + 1]
            col[j + 1] = -self.sn[j] * col[j] + self.cs[j] * col[j + 1]
            col[j] = t
        c, s, r = _givens(col[k], col[k + 1])
        self.cs[k], self.sn[k] = c, s
        col[k], col[k + 1] = r, 0.0
        self.R[:k + 2, k] = col[:k + 2]
        gk = self.g[k]
        self.g[k] = c * gk
        self.g[k + 1] = -s * gk
        self.cols = k + 1
        return abs(self.g[k + 1])

    def solve(self) -> np.ndarray:
        k = self.cols
        y = np.zeros(k)
        for i in range(k - 1, -1, -1):
            y[i] = (self.g[i] - self.R[i, i + 1:k] @ y[i + 1:k]) / self.R[i, i]
        return y


def gmres(A: SparseMatrix, b, x0=None, m: int | None = None,
          tol: float | None = None) -> SolveReport:
    """Full (non-restarted) minimum-residual solve via Arnoldi.

    Runs exactly ``m`` Arnoldi steps with modified Gram-Schmidt
    orthogonalization unless the residual drops below ``tol * ||b||`` or the
    subdiagonal vanishes (an invariant Krylov subspace, reported as
    convergence). The recorded residuals are the least-squares optima, which
    equal ||b - A x_k|| up to rounding.
    """
    b, x0 = _start(A, b, x0)
    n = A.n
    m = n if m is None else int(m)
    if not 1 <= m <= n:
        raise ValueError(f"iteration count must lie in [1, {n}]")
    bnorm = float(np.linalg.norm(b))

    spmvs = 0
    reductions = 0
    per_iter: list[int] = []

    r0 = b - A.matvec(x0)
    spmvs += 1
    beta = float(np.linalg.norm(r0))
    reductions += 1
    if beta == 0.0:
        return SolveReport(solution=x0, iterations=0, residual_history=(0.0,),
                           final_relative_residual=0.0, converged=True,
                           method="gmres", spmv_count=spmvs,
                           reduction_count=reductions, reductions_per_iteration=())

    V = np.zeros((m + 1, n))
    V[0] = r0 / beta
    H = np.zeros((m + 1, m))
    ls = _LeastSquares(m, beta)
    history = [beta]
    breakdown_tol = BREAKDOWN_RTOL * A.frobenius_norm
    converged = False
    breakdown_step = None
    k = 0
    for i in range(m):
        z = A.matvec(V[i])
        spmvs += 1
        events = 0
        for j in range(i + 1):
            hji = float(V[j] @ z)
            z -= hji * V[j]
            H[j, i] = hji
            events += 1
        hnext = float(np.linalg.norm(z))
        events += 1
        H[i + 1, i] = hnext
        reductions += events
        per_iter.append(events)
        residual = ls.push(H[:i + 2, i])
        history.append(residual)
        k = i + 1
        if hnext <= breakdown_tol:
            converged = True
            breakdown_step = i
            break
        V[i + 1] = z / hnext
        if tol is not None and residual <= tol * bnorm:
            converged = True
            break

    y = ls.solve()
    x = x0 + V[:k].T @ y
    return SolveReport(
        solution=x,
        iterations=k,
        residual_history=tuple(history),
        final_relative_residual=history[-1] / bnorm,
        converged=converged,
        method="gmres",
        spmv_count=spmvs,
        reduction_count=reductions,
        reductions_per_iteration=tuple(per_iter),
        breakdown_step=breakdown_step,
        workspace=KrylovWorkspace(basis=V[:k + 1].copy(), hessenberg=H[:k + 1, :k].copy(),
                                  residual_history=tuple(history)),
    )


def pgmres(A: SparseMatrix, b, x0=None, m: int | None = None,
           tol: float | None = None) -> SolveReport:
    """Pipelined minimum-residual solve with delayed normalization.

    Keeps an auxiliary basis of matrix images so the basis norm and all
    orthogonalization dots of a step form one combined reduction that a
    distributed run could overlap with the next matrix product. The price
    is a one-step lag: each basis vector is normalized only on the
    following pass, so the loop runs to ``m + 1`` to flush the pipeline
    and the stored Hessenberg entries are rescaled as the norms arrive.
    Entry ``[i-1, i-1]`` was computed from two unnormalized vectors and is
    divided by the squared norm; the other entries of column ``i-1`` by
    the norm itself.
    """
    b, x0 = _start(A, b, x0)
    n = A.n
    m = (n - 2) if m is None else int(m)
    if not 1 <= m <= n - 2:
        raise ValueError(f"pipelined iteration count must lie in [1, {n - 2}]")
    bnorm = float(np.linalg.norm(b))

    spmvs = 0
    reductions = 0
    per_iter: list[int] = []

    r0 = b - A.matvec(x0)
    spmvs += 1
    beta = float(np.linalg.norm(r0))
    reductions += 1
    if beta == 0.0:
        return SolveReport(solution=x0, iterations=0, residual_history=(0.0,),
                           final_relative_residual=0.0, converged=True,
                           method="pgmres", spmv_count=spmvs,
                           reduction_count=reductions, reductions_per_iteration=())

    V = np.zeros((m + 2, n))
    Z = np.zeros((m + 3, n))
    V[0] = r0 / beta
    Z[0] = V[0]
    H = np.zeros((m + 3, m + 2))
    ls = _LeastSquares(m, beta)
    history = [beta]
    breakdown_tol = BREAKDOWN_RTOL * A.frobenius_norm
    converged = False
    breakdown_step = None

    for i in range(m + 2):
        w = A.matvec(Z[i])
        spmvs += 1
        if i > 1:
            scale = H[i - 1, i - 2]
            if abs(scale) <= breakdown_tol:
                # The rescaling would divide by a vanishing norm. If the
                # least-squares residual is already negligible this is an
                # invariant subspace (convergence); otherwise it is a
                # genuine breakdown of the recurrence.
                if history[-1] <= 1e-10 * bnorm:
                    converged = True
                    breakdown_step = i - 1
                    break
                raise BreakdownError("pipelined recurrence hit a vanishing subdiagonal",
                                     step=i - 1)
            V[i - 1] /= scale
            Z[i] /= scale
            w /= scale
            H[:i - 1, i - 1] /= scale
            H[i - 1, i - 1] /= scale * scale
        if i > 0:
            Z[i + 1] = w - H[:i, i - 1] @ Z[1:i + 1]
            V[i] = Z[i] - H[:i, i - 1] @ V[:i]
            H[i, i - 1] = float(np.linalg.norm(V[i]))
        else:
            Z[1] = w
        H[:i + 1, i] = V[:i + 1] @ Z[i + 1]
        # The basis norm and all the dots above form one combined reduction.
        reductions += 1
        per_iter.append(1)
        if 1 <= i <= m:
            # Column i-1 of H is final now; advance the least-squares solve.
            history.append(ls.push(H[:i + 1, i - 1]))
            if tol is not None and history[-1] <= tol * bnorm:
                converged = True
                break

    k = ls.cols
    y = ls.solve()
    x = x0 + V[:k].T @ y
    return SolveReport(
        solution=x,
        iterations=k,
        residual_history=tuple(history),
        final_relative_residual=history[-1] / bnorm,
        converged=converged,
        method="pgmres",
        spmv_count=spmvs,
        reduction_count=reductions,
        reductions_per_iteration=tuple(per_iter),
        breakdown_step=breakdown_step,
        workspace=KrylovWorkspace(basis=V[:k + 1].copy(), hessenberg=H[:k + 1, :k].copy(),
                                  aux_basis=Z[:k + 2].copy(),
                                  residual_history=tuple(history)),
    )


def cg(A: SparseMatrix, b, x0=None, maxit: int | None = None,
       tol: float | None = None) -> SolveReport:
    """Conjugate gradients for symmetric positive definite systems.

    Two reduction events per iteration (the step-length dot and the new
    residual norm). Runs the full ``maxit`` unless the residual reaches
    ``tol * ||b||`` (or, in fixed-iteration mode, the exact-solution floor).
    """
    b, x0 = _start(A, b, x0)
    maxit = A.n if maxit is None else int(maxit)
    if maxit < 1:
        raise ValueError("maxit must be at least 1")
    bnorm = float(np.linalg.norm(b))
    threshold = (tol if tol is not None else 1e-14) * bnorm

    spmvs = 0
    reductions = 0
    per_iter: list[int] = []

    x = x0
    r = b - A.matvec(x)
    spmvs += 1
    rr = float(r @ r)
    reductions += 1
    history = [math.sqrt(rr)]
    converged = history[0] <= threshold
    p = r.copy()
    iterations = 0
    breakdown_step = None
    while iterations < maxit and not converged:
        Ap = A.matvec(p)
        spmvs += 1
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise BreakdownError("p'Ap is not positive; matrix is not SPD",
                                 step=iterations)
        alpha = rr / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        rr_new = float(r @ r)
        reductions += 2
        per_iter.append(2)
        iterations += 1
        history.append(math.sqrt(rr_new))
        if history[-1] <= threshold:
            converged = True
            break
        p = r + (rr_new / rr) * p
        rr = rr_new
    return SolveReport(
        solution=x,
        iterations=iterations,
        residual_history=tuple(history),
        final_relative_residual=history[-1] / bnorm,
        converged=converged,
        method="cg",
        spmv_count=spmvs,
        reduction_count=reductions,
        reductions_per_iteration=tuple(per_iter),
        breakdown_step=breakdown_step,
    )


def pipecg(A: SparseMatrix, b, x0=None, maxit: int | None = None,
           tol: float | None = None) -> SolveReport:
    """Pipelined conjugate gradients with a single fused reduction.

    Uses the residual-recurrence rearrangement (in the style of the
    combined-dot-product CG variants): the two dots of each step are taken
    together against the same residual, so one reduction event per
    iteration suffices and could overlap the matrix product that follows.
    Extra recurrences update the matrix images of the residual and search
    directions. Iterates match :func:`cg` in exact arithmetic.
    """
    b, x0 = _start(A, b, x0)
    maxit = A.n if maxit is None else int(maxit)
    if maxit < 1:
        raise ValueError("maxit must be at least 1")
    bnorm = float(np.linalg.norm(b))
    threshold = (tol if tol is not None else 1e-14) * bnorm

    spmvs = 0
    reductions = 0
    per_iter: list[int] = []

    x = x0
    r = b - A.matvec(x)
    w = A.matvec(r)
    spmvs += 2
    z = np.zeros_like(b)
    s = np.zeros_like(b)
    p = np.zeros_like(b)
    gamma_old = 0.0
    alpha = 0.0
    history: list[float] = []
    converged = False
    iterations = 0
    for i in range(maxit):
        # One fused reduction delivers both dots; ||r_i|| comes for free.
        gamma = float(r @ r)
        delta = float(w @ r)
        norm_r = math.sqrt(gamma)
        history.append(norm_r)
        if norm_r <= threshold:
            reductions += 1  # counted as the final check, not a full step
            converged = True
            break
        reductions += 1
        per_iter.append(1)
        q = A.matvec(w)
        spmvs += 1
        if i > 0:
            beta = gamma / gamma_old
            denom = delta - beta * gamma / alpha
            if denom == 0.0:
                raise BreakdownError("fused-recurrence step length is undefined", step=i)
            alpha = gamma / denom
        else:
            if delta <= 0.0:
                raise BreakdownError("r'Ar is not positive; matrix is not SPD", step=i)
            beta = 0.0
            alpha = gamma / delta
        z = q + beta * z
        s = w + beta * s
        p = r + beta * p
        x = x + alpha * p
        r = r - alpha * s
        w = w - alpha * z
        gamma_old = gamma
        iterations += 1
    if not converged:
        # Epilogue: one extra reduction records the final residual norm.
        final_norm = float(np.linalg.norm(r))
        reductions += 1
        history.append(final_norm)
        converged = final_norm <= threshold
    return SolveReport(
        solution=x,
        iterations=iterations,
        residual_history=tuple(history),
        final_relative_residual=history[-1] / bnorm,
        converged=converged,
        method="pipecg",
        spmv_count=spmvs,
        reduction_count=reductions,
        reductions_per_iteration=tuple(per_iter),
    )
