"""Minimax oracles: the sin^2 toy game, a logistic-bilinear game, robust least
squares (finite-sum), and a plain quadratic game used for sanity checks.

All problems take ``x`` and ``y`` as 1-d float arrays and are immutable after
construction.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import optimize

from .core import Iterate


class UnsupportedOperation(RuntimeError):
    """The problem has no closed form for the requested quantity."""


class MinimaxProblem:
    """Base oracle for ``min_x max_y f(x, y)``.

    Subclasses implement ``value`` and ``grad``; finite-sum problems also
    implement ``component_grad`` (0-based component index).
    """

    name = "problem"
    d1: int
    d2: int
    n_components: int = 1
    analytic_l: Optional[float] = None
    analytic_mu1: Optional[float] = None
    analytic_mu2: Optional[float] = None
    has_exact_best_response: bool = False
    saddle: Optional[Iterate] = None

    def _check(self, x, y):
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if x.size != self.d1 or y.size != self.d2:
            raise ValueError(
                f"dimension mismatch: got ({x.size}, {y.size}), expected ({self.d1}, {self.d2})"
            )
        return x, y

    def value(self, x, y) -> float:
        raise NotImplementedError

    def grad(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def component_grad(self, i: int, x, y) -> tuple[np.ndarray, np.ndarray]:
        if not 0 <= i < self.n_components:
            raise IndexError(f"component {i} out of range [0, {self.n_components})")
        if self.n_components == 1:
            return self.grad(x, y)
        raise NotImplementedError

    def best_response_y(self, x) -> np.ndarray:
        raise UnsupportedOperation(f"{self.name}: no exact best response")

    def g_value(self, x) -> float:
        """``g(x) = max_y f(x, y)``."""
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        return self.value(x, self.best_response_y(x))

    def g_star(self) -> float:
        raise UnsupportedOperation(f"{self.name}: g* not available")

    def min_x_value(self, y) -> float:
        """``min_x f(x, y)``, used for the primal PL ratio."""
        raise UnsupportedOperation(f"{self.name}: min_x f not available")

    @property
    def is_finite_sum(self) -> bool:
        return self.n_components > 1

    # hot-loop description consumed by agda_pl._kernels; None = generic path
    kernel_kind: Optional[str] = None


class ToyProblem(MinimaxProblem):
    """``f(x, y) = x^2 + 3 sin^2 x sin^2 y - 4 y^2 - 10 sin^2 y``.

    Unique saddle at the origin, ``x*(y) = y*(x) = 0``. PL constants
    1/16 and 1/14; ``l = 28`` bounds every Hessian block.
    """

    name = "toy"
    d1 = d2 = 1
    analytic_l = 28.0
    analytic_mu1 = 1.0 / 16.0
    analytic_mu2 = 1.0 / 14.0
    has_exact_best_response = True
    kernel_kind = "scalar"
    kernel_code = 0

    def __init__(self):
        self.saddle = Iterate(np.zeros(1), np.zeros(1))

    def value(self, x, y):
        x, y = self._check(x, y)
        sx, sy = np.sin(x[0]) ** 2, np.sin(y[0]) ** 2
        return float(x[0] ** 2 + 3.0 * sx * sy - 4.0 * y[0] ** 2 - 10.0 * sy)

    def grad(self, x, y):
        x, y = self._check(x, y)
        a, b = x[0], y[0]
        gx = 2.0 * a + 3.0 * np.sin(b) ** 2 * np.sin(2.0 * a)
        gy = -8.0 * b + 3.0 * np.sin(a) ** 2 * np.sin(2.0 * b) - 10.0 * np.sin(2.0 * b)
        return np.array([gx]), np.array([gy])

    def best_response_y(self, x):
        self._check(x, np.zeros(1))
        return np.zeros(1)

    def g_value(self, x):
        x, _ = self._check(x, np.zeros(1))
        return float(x[0] ** 2)

    def g_star(self):
        return 0.0

    def min_x_value(self, y):
        return self.value(np.zeros(1), y)


def _softplus(z: float) -> float:
    return float(np.logaddexp(0.0, z))


def _sigmoid(z: float) -> float:
    return float(0.5 * (1.0 + np.tanh(0.5 * z)))


class LogisticBilinearProblem(MinimaxProblem):
    """``f(x, y) = log(1 + e^x) + 3 x y - log(1 + e^y)``.

    Convex-concave but ``max_y f`` is not attained for most ``x``, so ``g`` and
    the potential are unavailable. The saddle is solved numerically.
    """

    name = "logistic_bilinear"
    d1 = d2 = 1
    kernel_kind = "scalar"
    kernel_code = 1

    def __init__(self):
        # stationarity: sigmoid(x) + 3y = 0, 3x - sigmoid(y) = 0
        def eqs(z):
            return [_sigmoid(z[0]) + 3.0 * z[1], 3.0 * z[0] - _sigmoid(z[1])]

        sol = optimize.fsolve(eqs, [0.1, -0.2], xtol=1e-15)
        self.saddle = Iterate(sol[:1], sol[1:])

    def value(self, x, y):
        x, y = self._check(x, y)
        return _softplus(x[0]) + 3.0 * x[0] * y[0] - _softplus(y[0])

    def grad(self, x, y):
        x, y = self._check(x, y)
        return (
            np.array([_sigmoid(x[0]) + 3.0 * y[0]]),
            np.array([3.0 * x[0] - _sigmoid(y[0])]),
        )


class QuadraticProblem(MinimaxProblem):
    """``f = 1/2 x'Px + x'By - 1/2 y'Ry`` with ``P, R`` positive definite.

    Strongly convex-concave, saddle at the origin, everything in closed form.
    """

    name = "quadratic"

    def __init__(self, P, B, R):
        P, B, R = (np.atleast_2d(np.asarray(m, dtype=np.float64)) for m in (P, B, R))
        self.P, self.B, self.R = P, B, R
        self.d1, self.d2 = B.shape
        if P.shape != (self.d1, self.d1) or R.shape != (self.d2, self.d2):
            raise ValueError("block shapes do not match")
        evp, evr = np.linalg.eigvalsh(P), np.linalg.eigvalsh(R)
        if evp.min() <= 0 or evr.min() <= 0:
            raise ValueError("P and R must be positive definite")
        self._Rinv = np.linalg.inv(R)
        self._Pinv = np.linalg.inv(P)
        self.analytic_mu1 = float(evp.min())
        self.analytic_mu2 = float(evr.min())
        self.analytic_l = float(max(evp.max(), evr.max(), np.linalg.norm(B, 2)))
        self.has_exact_best_response = True
        self.saddle = Iterate(np.zeros(self.d1), np.zeros(self.d2))

    def value(self, x, y):
        x, y = self._check(x, y)
        return float(0.5 * x @ self.P @ x + x @ self.B @ y - 0.5 * y @ self.R @ y)

    def grad(self, x, y):
        x, y = self._check(x, y)
        return self.P @ x + self.B @ y, self.B.T @ x - self.R @ y

    def best_response_y(self, x):
        x, _ = self._check(x, np.zeros(self.d2))
        return self._Rinv @ (self.B.T @ x)

    def g_star(self):
        return 0.0

    def min_x_value(self, y):
        _, y = self._check(np.zeros(self.d1), y)
        return self.value(-self._Pinv @ (self.B @ y), y)


# ---------------------------------------------------------------------------
# robust least squares


@dataclass(frozen=True)
class RlsDataset:
    A: np.ndarray
    y0: np.ndarray
    C: np.ndarray
    lambda_reg: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        y0 = np.asarray(self.y0, dtype=np.float64).reshape(-1)
        C = np.atleast_2d(np.asarray(self.C, dtype=np.float64))
        if y0.size != A.shape[0] or C.shape[1] != A.shape[0]:
            raise ValueError("A, y0 and C have inconsistent shapes")
        if not self.lambda_reg > 1:
            raise ValueError("lambda_reg must exceed 1 for the two-sided PL property")
        for arr in (A, y0, C):
            arr.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "C", C)

    @property
    def M(self) -> np.ndarray:
        return self.C.T @ self.C


class RlsProblem(MinimaxProblem):
    """``f(x, y) = ||Ax - y||_M^2 - lambda ||y - y0||_M^2`` with ``M = C'C``.

    Component ``i`` (row ``c_i`` of ``C``) is
    ``f_i = n [ (c_i'(Ax - y))^2 - lambda (c_i'(y - y0))^2 ]`` so that the mean
    over the ``n = rows(C)`` components equals ``f``.
    """

    name = "rls"
    kernel_kind = "rls"

    def __init__(self, data: RlsDataset):
        self.data = data
        A, C = data.A, data.C
        self.lam = float(data.lambda_reg)
        self.A, self.C, self.y0 = A, C, data.y0
        self.B = np.ascontiguousarray(C @ A)
        self.Cc = np.ascontiguousarray(C)
        self.d1 = A.shape[1]
        self.d2 = A.shape[0]
        self.n_components = C.shape[0]
        self.has_exact_best_response = True

        # projector onto range(M) = row space of C
        U, s, Vt = np.linalg.svd(C, full_matrices=False)
        rank = int(np.sum(s > s.max() * max(C.shape) * np.finfo(float).eps)) if s.size else 0
        V = Vt[:rank].T
        self._range_basis = V

        lam = self.lam
        H_xx = 2.0 * self.B.T @ self.B
        ev_x = np.linalg.eigvalsh(H_xx)
        ev_M = s[:rank] ** 2
        tol = ev_x.max() * 1e-10
        self.analytic_mu1 = float(ev_x[ev_x > tol].min())
        self.analytic_mu2 = float(2.0 * (lam - 1.0) * ev_M.min())
        M = C.T @ C
        # block form of the sum-of-norms Lipschitz condition
        self.analytic_l = float(
            max(ev_x.max(), 2.0 * np.linalg.norm(A.T @ M, 2), 2.0 * (lam - 1.0) * ev_M.max())
        )
        # per-component modulus (each f_i carries the factor n)
        nb = np.linalg.norm(self.B, axis=1)
        nc = np.linalg.norm(C, axis=1)
        n = self.n_components
        self.component_l = float(
            2.0 * n * np.max(np.maximum(np.maximum(nb**2, nb * nc), (lam - 1.0) * nc**2))
        )

        self._x_ls, *_ = np.linalg.lstsq(self.B, C @ self.y0, rcond=None)
        self._g_scale = lam / (lam - 1.0)
        res = self.B @ self._x_ls - C @ self.y0
        self._g_star = float(self._g_scale * res @ res)
        self.saddle = Iterate(self._x_ls, self.best_response_y(self._x_ls))

    def value(self, x, y):
        x, y = self._check(x, y)
        r = self.B @ x - self.Cc @ y
        s = self.Cc @ (y - self.y0)
        return float(r @ r - self.lam * (s @ s))

    def grad(self, x, y):
        x, y = self._check(x, y)
        r = self.B @ x - self.Cc @ y
        s = self.Cc @ (y - self.y0)
        return 2.0 * (self.B.T @ r), -2.0 * (self.Cc.T @ r) - 2.0 * self.lam * (self.Cc.T @ s)

    def component_grad(self, i, x, y):
        if not 0 <= i < self.n_components:
            raise IndexError(f"component {i} out of range [0, {self.n_components})")
        x, y = self._check(x, y)
        n = self.n_components
        bi, ci = self.B[i], self.Cc[i]
        r = bi @ x - ci @ y
        s = ci @ (y - self.y0)
        return 2.0 * n * r * bi, (-2.0 * n * r - 2.0 * n * self.lam * s) * ci

    def best_response_y(self, x):
        x, _ = self._check(x, self.y0)
        d = self.y0 - self.A @ x
        V = self._range_basis
        return self.y0 + V @ (V.T @ d) / (self.lam - 1.0)

    def g_value(self, x):
        x, _ = self._check(x, self.y0)
        r = self.B @ x - self.Cc @ self.y0
        return float(self._g_scale * r @ r)

    def g_star(self):
        return self._g_star

    def min_x_value(self, y):
        _, y = self._check(np.zeros(self.d1), y)
        xm, *_ = np.linalg.lstsq(self.B, self.Cc @ y, rcond=None)
        return self.value(xm, y)


def make_toy() -> ToyProblem:
    return ToyProblem()


def make_logistic_bilinear() -> LogisticBilinearProblem:
    return LogisticBilinearProblem()


def make_rls(data: RlsDataset) -> RlsProblem:
    return RlsProblem(data)


# ---------------------------------------------------------------------------
# datasets


class DatasetKind(str, Enum):
    DATASET1 = "dataset1"
    DATASET3 = "dataset3"
    CSV = "csv"


def gen_rls_dataset(
    kind: Union[DatasetKind, str],
    dims: tuple[int, int] = (1000, 500),
    seed: int = 0,
    *,
    path: Union[str, os.PathLike, None] = None,
    rank_fraction: float = 0.8,
    row_scale: float = 1.0,
) -> RlsDataset:
    """Build an RLS dataset.

    ``dataset1``: Gaussian rows, ``y0 = A x* + eps``, ``M = I``, lambda 3.
    ``dataset3``: rows from ``N(0, Sigma)`` with ``Sigma_ij = 2^(-|i-j|/10)``,
    ``M`` of rank ``floor(rank_fraction * n)`` with eigenvalues drawn from
    ``U[0.2, 1.8]``, lambda 1.5.
    ``csv``: last column of the matrix at ``path`` is ``y0``, the rest is
    ``A``; ``M = I`` and lambda 2.

    ``row_scale`` multiplies every row of ``A`` (before ``y0`` is formed);
    ``1/sqrt(n)`` gives a normalised design.
    """
    kind = DatasetKind(kind)
    if kind is DatasetKind.CSV:
        if path is None:
            raise ValueError("csv dataset needs a path")
        mat = read_matrix_csv(path)
        if mat.shape[1] < 2:
            raise ValueError(f"{path}: need at least one feature column and a target column")
        A = mat[:, :-1] * row_scale
        return RlsDataset(A, mat[:, -1], np.eye(A.shape[0]), 2.0)

    n, m = (int(v) for v in dims)
    if n <= 0 or m <= 0:
        raise ValueError(f"dimensions must be positive, got {dims}")
    rng = np.random.default_rng(seed)
    if kind is DatasetKind.DATASET1:
        A = rng.standard_normal((n, m)) * row_scale
        x_star = rng.standard_normal(m)
        eps = rng.normal(0.0, 0.1, size=n)  # variance 0.01
        return RlsDataset(A, A @ x_star + eps, np.eye(n), 3.0)

    idx = np.arange(m)
    sigma = 2.0 ** (-np.abs(idx[:, None] - idx[None, :]) / 10.0)
    A = rng.multivariate_normal(np.zeros(m), sigma, size=n, method="cholesky") * row_scale
    x_star = rng.standard_normal(m)
    y0 = A @ x_star + rng.normal(0.0, 0.1, size=n)
    rank = int(np.floor(rank_fraction * n))
    if not 1 <= rank <= n:
        raise ValueError(f"rank_fraction={rank_fraction} gives rank {rank}")
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = rng.uniform(0.2, 1.8, size=rank)
    C = np.sqrt(eig)[:, None] * Q[:, :rank].T
    return RlsDataset(A, y0, C, 1.5)


def write_matrix_csv(path: Union[str, os.PathLike], mat) -> None:
    """``rows,cols`` header then one comma-separated row per line, 17 significant digits."""
    mat = np.atleast_2d(np.asarray(mat, dtype=np.float64))
    rows, cols = mat.shape
    lines = [f"{rows},{cols}"]
    lines.extend(",".join(format(v, ".17g") for v in row) for row in mat)
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path: Union[str, os.PathLike]) -> np.ndarray:
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ValueError(f"{path}: empty file")
    try:
        rows, cols = (int(v) for v in text[0].split(","))
    except ValueError as exc:
        raise ValueError(f"{path}: bad header {text[0]!r}, expected 'rows,cols'") from exc
    body = text[1:]
    if len(body) != rows:
        raise ValueError(f"{path}: header says {rows} rows, found {len(body)}")
    out = np.empty((rows, cols))
    for k, line in enumerate(body):
        parts = line.split(",")
        if len(parts) != cols:
            raise ValueError(f"{path}: line {k + 2} has {len(parts)} fields, expected {cols}")
        try:
            out[k] = [float(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"{path}: line {k + 2}: {exc}") from exc
    return out


def save_rls_dataset(data: RlsDataset, directory: Union[str, os.PathLike]) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(d / "A.csv", data.A)
    write_matrix_csv(d / "y0.csv", data.y0[:, None])
    write_matrix_csv(d / "C.csv", data.C)
    (d / "lambda.txt").write_text(format(data.lambda_reg, ".17g") + "\n")


def load_rls_dataset(directory: Union[str, os.PathLike]) -> RlsDataset:
    d = Path(directory)
    y0 = read_matrix_csv(d / "y0.csv")
    if y0.shape[1] != 1:
        raise ValueError(f"{d / 'y0.csv'}: expected a single column")
    lam = float((d / "lambda.txt").read_text().strip())
    return RlsDataset(read_matrix_csv(d / "A.csv"), y0[:, 0], read_matrix_csv(d / "C.csv"), lam)
