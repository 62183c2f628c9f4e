"""
Block-diagonal SDP feasibility problems and the embedded interior-point solver.

A problem asks for symmetric PSD blocks X_1..X_k and free scalars f with

    <A_i, X> + B_i f = b_i        for every equality i.

An equality stores its PSD coefficients as (block, i, j, v) with i >= j; the
entry contributes v * X[block][i, j] to the left-hand side (an off-diagonal
entry is counted once, so v already includes the factor 2 of <A, X>).

The solver hands the problem to cvxopt's homogeneous self-dual cone solver as
the dual of the conelp standard form, after row equilibration, removal of
dependent rows and elimination of the free-variable null space. The returned
status is decided from residuals recomputed on the original data, never from
the solver's own flag alone.
"""

from dataclasses import dataclass, field
from enum import Enum
from time import time
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
from cvxopt import matrix, solvers, spmatrix
from threadpoolctl import threadpool_limits

from utils.errors import SdpLimitError
from utils.logger_utils import log

BlockEntry = Tuple[int, int, int, float]
FreeEntry = Tuple[int, float]


@dataclass(frozen=True)
class SdpEquality:
    block_entries: Tuple[BlockEntry, ...]
    free_entries: Tuple[FreeEntry, ...]
    rhs: float


@dataclass(frozen=True)
class SdpProblem:
    block_dims: Tuple[int, ...]
    nfree: int
    equalities: Tuple[SdpEquality, ...]
    objective: Tuple[BlockEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "block_dims", tuple(int(n) for n in self.block_dims))
        object.__setattr__(self, "equalities", tuple(self.equalities))
        if any(n <= 0 for n in self.block_dims):
            raise ValueError(f"block dimensions must be positive: {self.block_dims}")
        for eq in self.equalities:
            for blk, i, j, _ in eq.block_entries:
                if not 0 <= blk < len(self.block_dims):
                    raise ValueError(f"block index {blk} out of range")
                if not 0 <= j <= i < self.block_dims[blk]:
                    raise ValueError(f"entry ({i}, {j}) is not in the lower triangle of block {blk}")
            for k, _ in eq.free_entries:
                if not 0 <= k < self.nfree:
                    raise ValueError(f"free index {k} out of range")

    @property
    def psd_dim(self) -> int:
        return sum(self.block_dims)

    @property
    def svec_size(self) -> int:
        return sum(n * (n + 1) // 2 for n in self.block_dims)

    def svec_offsets(self) -> List[int]:
        offsets, total = [], 0
        for n in self.block_dims:
            offsets.append(total)
            total += n * (n + 1) // 2
        return offsets

    def stats(self) -> dict:
        return {
            "blocks": len(self.block_dims),
            "psd_dim": self.psd_dim,
            "equalities": len(self.equalities),
            "free": self.nfree,
        }

    def rhs(self) -> np.ndarray:
        return np.array([eq.rhs for eq in self.equalities], dtype=float)

    def constraint_matrix(self) -> scipy.sparse.csr_matrix:
        """Rows are equalities; columns are the lower-triangle entries of each block, then f."""
        offsets = self.svec_offsets()
        rows, cols, vals = [], [], []
        for r, eq in enumerate(self.equalities):
            for blk, i, j, v in eq.block_entries:
                rows.append(r)
                cols.append(offsets[blk] + i * (i + 1) // 2 + j)
                vals.append(v)
            for k, v in eq.free_entries:
                rows.append(r)
                cols.append(self.svec_size + k)
                vals.append(v)
        shape = (len(self.equalities), self.svec_size + self.nfree)
        return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=shape)

    def scaled(self, factor: float) -> "SdpProblem":
        return SdpProblem(
            self.block_dims,
            self.nfree,
            tuple(
                SdpEquality(
                    tuple((b, i, j, v * factor) for b, i, j, v in eq.block_entries),
                    tuple((k, v * factor) for k, v in eq.free_entries),
                    eq.rhs * factor,
                )
                for eq in self.equalities
            ),
            self.objective,
        )


class SdpStatus(str, Enum):
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class SolverSettings:
    feas_tol: float = 1e-8
    psd_tol: float = 1e-8
    cert_tol: float = 1e-6
    max_iterations: int = 200
    max_psd_dim: int = 1000
    max_equalities: int = 20000
    threads: int = 1
    trace_weight: float = 1.0


@dataclass
class SdpSolution:
    status: SdpStatus
    gram: List[np.ndarray] = field(default_factory=list)
    free: np.ndarray = field(default_factory=lambda: np.zeros(0))
    primal_residual: float = float("inf")
    dual_residual: float = float("inf")
    min_eigenvalues: List[float] = field(default_factory=list)
    iterations: int = 0
    certificate: Optional[np.ndarray] = None
    certificate_violation: Optional[float] = None
    message: str = ""
    solver_status: str = ""

    @property
    def min_eigenvalue(self) -> float:
        return min(self.min_eigenvalues, default=0.0)

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "solver_status": self.solver_status,
            "primal_residual": _finite(self.primal_residual),
            "dual_residual": _finite(self.dual_residual),
            "min_eigenvalue": float(self.min_eigenvalue),
            "iterations": int(self.iterations),
            "certificate_violation": _finite(self.certificate_violation),
            "message": self.message,
        }


def _finite(x: Optional[float]) -> Optional[float]:
    return float(x) if x is not None and np.isfinite(x) else None


def svec_of(problem: SdpProblem, grams: Sequence[np.ndarray]) -> np.ndarray:
    parts = []
    for n, X in zip(problem.block_dims, grams):
        rows, cols = np.tril_indices(n)
        # tril_indices walks row by row, matching i*(i+1)/2 + j
        parts.append(np.asarray(X, dtype=float)[rows, cols])
    return np.concatenate(parts) if parts else np.zeros(0)


def symmetric_blocks(problem: SdpProblem, svec: np.ndarray) -> List[np.ndarray]:
    """Turns a combination sum_i y_i A_i given in lower-triangle coordinates into symmetric matrices."""
    blocks = []
    for n, off in zip(problem.block_dims, problem.svec_offsets()):
        S = np.zeros((n, n))
        rows, cols = np.tril_indices(n)
        vals = svec[off : off + n * (n + 1) // 2]
        off_diag = rows != cols
        S[rows, cols] = np.where(off_diag, vals / 2.0, vals)
        S[cols, rows] = S[rows, cols]
        blocks.append(S)
    return blocks


def classify_point(
    problem: SdpProblem,
    grams: Sequence[np.ndarray],
    free: np.ndarray,
    settings: SolverSettings,
) -> Tuple[bool, float, List[float]]:
    """
    Classifies a candidate point of an SdpProblem.

    Args:
        problem (SdpProblem): The problem.
        grams (Sequence[np.ndarray]): One symmetric matrix per PSD block.
        free (np.ndarray): Values of the free scalars.
        settings (SolverSettings): feas_tol bounds the row-scaled residual, psd_tol the eigenvalues.

    Returns:
        Tuple[bool, float, List[float]]: (feasible, max |residual|, per-block minimum eigenvalue).
    """
    M = problem.constraint_matrix()
    b = problem.rhs()
    point = np.concatenate([svec_of(problem, grams), np.asarray(free, dtype=float)])
    residual = M @ point - b
    row_norm = abs(M).max(axis=1).toarray().ravel() if M.shape[0] else np.zeros(0)
    scale = np.maximum(1.0, np.maximum(np.abs(b), row_norm))
    scaled = float(np.max(np.abs(residual) / scale)) if residual.size else 0.0
    eigs = [float(np.linalg.eigvalsh(X)[0]) for X in grams]
    feasible = scaled <= settings.feas_tol and min(eigs, default=0.0) >= -settings.psd_tol
    max_abs = float(np.max(np.abs(residual))) if residual.size else 0.0
    return feasible, max_abs, eigs


def verify_infeasibility_certificate(
    problem: SdpProblem, y: np.ndarray, cert_tol: float = 1e-6
) -> Tuple[bool, float]:
    """
    Checks a Farkas certificate: sum_i y_i A_i <= 0 (NSD), B^T y = 0, b^T y > 0.

    Returns (accepted, violation) where violation is the positive part of the
    largest eigenvalue and of |B^T y| relative to b^T y.
    """
    y = np.asarray(y, dtype=float)
    by = float(problem.rhs() @ y)
    if not by > 0:
        return False, float("inf")
    combo = problem.constraint_matrix().T @ y
    worst = 0.0
    for S in symmetric_blocks(problem, combo[: problem.svec_size]):
        worst = max(worst, float(np.linalg.eigvalsh(S)[-1]))
    free_part = combo[problem.svec_size :]
    if free_part.size:
        worst = max(worst, float(np.max(np.abs(free_part))))
    violation = worst / by
    return violation <= cert_tol, violation


def _check_limits(problem: SdpProblem, settings: SolverSettings) -> None:
    if problem.psd_dim > settings.max_psd_dim:
        raise SdpLimitError(
            f"total PSD dimension {problem.psd_dim} exceeds the limit {settings.max_psd_dim}"
        )
    if len(problem.equalities) > settings.max_equalities:
        raise SdpLimitError(
            f"{len(problem.equalities)} equalities exceed the limit {settings.max_equalities}"
        )


def _independent_rows(K: np.ndarray, tol: float = 1e-11) -> Tuple[np.ndarray, np.ndarray]:
    """Splits row indices into a maximal independent set and the rest, from the Gram matrix K = M M^T."""
    if K.shape[0] == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    _, r, piv = scipy.linalg.qr(K, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > tol * diag[0])) if diag[0] > 0 else 0
    return np.sort(piv[:rank]), np.sort(piv[rank:])


def _infeasible(problem, y, settings, message, solver_status="") -> Optional[SdpSolution]:
    ok, violation = verify_infeasibility_certificate(problem, y, settings.cert_tol)
    if not ok:
        return None
    return SdpSolution(
        status=SdpStatus.INFEASIBLE,
        certificate=y,
        certificate_violation=violation,
        message=message,
        solver_status=solver_status,
    )


def solve(problem: SdpProblem, settings: Optional[SolverSettings] = None) -> SdpSolution:
    """
    Decides feasibility of an SdpProblem.

    FEASIBLE comes with Gram blocks and free values whose scaled residual is at
    most feas_tol and whose eigenvalues are at least -psd_tol. INFEASIBLE comes
    with a certificate accepted by verify_infeasibility_certificate. Anything
    else, including numerical breakdown of the solver, is UNKNOWN.

    Args:
        problem (SdpProblem): The feasibility problem.
        settings (SolverSettings, optional): Tolerances and limits. Defaults to SolverSettings().

    Returns:
        SdpSolution: The status with its point or certificate.

    Raises:
        SdpLimitError: If the problem exceeds max_psd_dim or max_equalities.
    """
    settings = settings or SolverSettings()
    _check_limits(problem, settings)
    start = time()

    p = len(problem.equalities)
    grams0 = [np.zeros((n, n)) for n in problem.block_dims]
    if p == 0:
        return SdpSolution(
            SdpStatus.FEASIBLE, grams0, np.zeros(problem.nfree), 0.0, 0.0,
            [0.0] * len(grams0), message="no equalities",
        )

    M = problem.constraint_matrix()
    b = problem.rhs()
    nsvec = problem.svec_size
    row_norm = abs(M).max(axis=1).toarray().ravel()

    empty = np.flatnonzero(row_norm == 0)
    for i in empty:
        if b[i] != 0:
            y = np.zeros(p)
            y[i] = np.sign(b[i])
            found = _infeasible(problem, y, settings, "equality with no unknowns and non-zero right-hand side")
            if found:
                return found

    active = np.flatnonzero(row_norm > 0)
    Ms = scipy.sparse.diags(1.0 / row_norm[active]) @ M[active]
    bs = b[active] / row_norm[active]

    K = (Ms @ Ms.T).toarray()
    keep_local, dropped_local = _independent_rows(K)
    if dropped_local.size:
        K_kk = K[np.ix_(keep_local, keep_local)]
        T = scipy.linalg.solve(K_kk, K[np.ix_(keep_local, dropped_local)], assume_a="pos")
        delta = bs[dropped_local] - T.T @ bs[keep_local]
        for col, i in enumerate(dropped_local):
            if abs(delta[col]) > 1e-9 * max(1.0, abs(bs[i])):
                ys = np.zeros(len(active))
                ys[i] = 1.0
                ys[keep_local] = -T[:, col]
                ys *= np.sign(delta[col])
                y = np.zeros(p)
                y[active] = ys / row_norm[active]
                found = _infeasible(problem, y, settings, "inconsistent linearly dependent equalities")
                if found:
                    return found
        log(f"Removed {dropped_local.size} linearly dependent equalities.")

    keep = active[keep_local]
    Mk = Ms[keep_local]
    bk = bs[keep_local]
    pk = len(keep)

    B = Mk[:, nsvec:].toarray()
    if problem.nfree and np.any(B):
        R = scipy.linalg.orth(B.T)
    else:
        R = np.zeros((problem.nfree, 0))
    r = R.shape[1]

    dims_s = list(problem.block_dims)
    dense_offsets = np.cumsum([0] + [n * n for n in dims_s])
    svec_offsets = problem.svec_offsets()
    i_of = np.zeros(nsvec, dtype=int)
    j_of = np.zeros(nsvec, dtype=int)
    n_of = np.zeros(nsvec, dtype=int)
    off_of = np.zeros(nsvec, dtype=int)
    for blk, n in enumerate(dims_s):
        rows, cols = np.tril_indices(n)
        sl = slice(svec_offsets[blk], svec_offsets[blk] + len(rows))
        i_of[sl], j_of[sl], n_of[sl], off_of[sl] = rows, cols, n, dense_offsets[blk]

    coo = Mk[:, :nsvec].tocoo()
    ii, jj, nn, oo = i_of[coo.col], j_of[coo.col], n_of[coo.col], off_of[coo.col]
    diag = ii == jj
    od = ~diag
    g_rows = np.concatenate([oo[diag] + ii[diag] * (nn[diag] + 1), oo[od] + ii[od] + jj[od] * nn[od], oo[od] + jj[od] + ii[od] * nn[od]])
    g_cols = np.concatenate([coo.row[diag], coo.row[od], coo.row[od]])
    g_vals = np.concatenate([coo.data[diag], coo.data[od] / 2.0, coo.data[od] / 2.0])
    n_dense = int(dense_offsets[-1])
    G = scipy.sparse.coo_matrix((g_vals, (g_rows, g_cols)), shape=(n_dense, pk)).tocsc()
    G.sum_duplicates()
    G = G.tocoo()

    h = np.zeros(n_dense)
    for blk, n in enumerate(dims_s):
        h[dense_offsets[blk] + np.arange(n) * (n + 1)] = settings.trace_weight
    for blk, i, j, v in problem.objective:
        n = dims_s[blk]
        if i == j:
            h[dense_offsets[blk] + i * (n + 1)] += v
        else:
            h[dense_offsets[blk] + i + j * n] += v / 2.0
            h[dense_offsets[blk] + j + i * n] += v / 2.0

    c_cvx = matrix((-bk).tolist(), (pk, 1))
    G_cvx = spmatrix(G.data.tolist(), G.row.tolist(), G.col.tolist(), (n_dense, pk))
    h_cvx = matrix(h.tolist(), (n_dense, 1))
    if r:
        A_np = (B @ R).T
        A_cvx = matrix(A_np.T.tolist(), (r, pk))
    else:
        A_cvx = spmatrix([], [], [], (0, pk))
    b_cvx = matrix(0.0, (r, 1))
    dims = {"l": 0, "q": [], "s": dims_s}
    options = {
        "show_progress": False,
        "maxiters": settings.max_iterations,
        "abstol": settings.feas_tol,
        "reltol": settings.feas_tol,
        "feastol": settings.feas_tol / 10.0,
        "refinement": 1,
    }

    log(
        f"Solving SDP: {len(dims_s)} blocks, PSD dimension {problem.psd_dim}, "
        f"{pk} of {p} equalities, {problem.nfree} free ({r} after reduction)."
    )
    try:
        with threadpool_limits(limits=settings.threads):
            sol = solvers.conelp(c_cvx, G_cvx, h_cvx, dims, A_cvx, b_cvx, kktsolver="chol", options=options)
    except (ArithmeticError, ValueError) as e:
        log(f"Solver breakdown: {e}")
        return SdpSolution(SdpStatus.UNKNOWN, message=f"numerical breakdown: {e}", solver_status="error")

    raw_status = sol["status"]
    iterations = int(sol.get("iterations") or 0)
    log(f"cvxopt finished with status '{raw_status}' after {iterations} iterations in {time() - start:.2f} seconds.")

    if sol.get("z") is not None:
        z = np.array(sol["z"]).ravel()
        grams = []
        for blk, n in enumerate(dims_s):
            Z = z[dense_offsets[blk] : dense_offsets[blk + 1]].reshape((n, n), order="F")
            grams.append((Z + Z.T) / 2.0)
        u = np.array(sol["y"]).ravel() if r else np.zeros(0)
        free = R @ u if r else np.zeros(problem.nfree)
        feasible, residual, eigs = classify_point(problem, grams, free, settings)
        if feasible:
            dual = 0.0
            if sol.get("x") is not None:
                x = np.array(sol["x"]).ravel()
                slack = h - G.tocsr() @ x
                for blk, n in enumerate(dims_s):
                    S = slack[dense_offsets[blk] : dense_offsets[blk + 1]].reshape((n, n), order="F")
                    dual = max(dual, -float(np.linalg.eigvalsh((S + S.T) / 2.0)[0]))
                if r:
                    dual = max(dual, float(np.max(np.abs(A_np @ x))))
            return SdpSolution(
                status=SdpStatus.FEASIBLE,
                gram=grams,
                free=free,
                primal_residual=residual,
                dual_residual=dual,
                min_eigenvalues=eigs,
                iterations=iterations,
                solver_status=raw_status,
            )
        candidate_message = f"best iterate has residual {residual:.3e}, minimum eigenvalue {min(eigs, default=0.0):.3e}"
    else:
        candidate_message = "no primal iterate"

    if sol.get("x") is not None:
        x = np.array(sol["x"]).ravel()
        bx = float(bk @ x)
        if bx > 0:
            y = np.zeros(p)
            y[keep] = (x / bx) / row_norm[keep]
            found = _infeasible(problem, y, settings, "Farkas certificate from the solver", raw_status)
            if found:
                found.iterations = iterations
                return found

    return SdpSolution(
        status=SdpStatus.UNKNOWN,
        iterations=iterations,
        message=f"solver status '{raw_status}'; {candidate_message}",
        solver_status=raw_status,
    )
