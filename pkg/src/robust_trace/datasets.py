"""Trace-regression datasets ``Y_i = <X_i, Theta*> + eps_i``.

Four structural encodings are supported, one per problem instance. All of
them can be expanded to the generic dense form with :meth:`to_dense`, which is
only meant for small problems and cross-checks.

Vectorisation is column-major throughout: ``vec(A) = A.reshape(-1, order="F")``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "vec",
    "mat",
    "TraceDataset",
    "DenseDesign",
    "DiagonalDesign",
    "SingletonDesign",
    "MultiResponse",
]


def vec(A) -> np.ndarray:
    """Stack the columns of ``A`` into a vector."""
    return np.asarray(A).reshape(-1, order="F")


def mat(v, shape) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape(shape, order="F")


def _as_float(a, name):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


class TraceDataset:
    """Common interface of the four encodings."""

    kind: str

    @property
    def dims(self) -> tuple[int, int]:
        raise NotImplementedError

    @property
    def n_obs(self) -> int:
        """Number of scalar observations ``N`` in the trace-regression form."""
        raise NotImplementedError

    def to_dense(self) -> "DenseDesign":
        raise NotImplementedError


@dataclass(frozen=True)
class DenseDesign(TraceDataset):
    """Dense design matrices ``X`` of shape (N, d1, d2) and responses (N,)."""

    X: np.ndarray
    Y: np.ndarray
    kind: str = field(default="dense", init=False)

    def __post_init__(self):
        X = _as_float(self.X, "X")
        Y = _as_float(self.Y, "Y").ravel()
        if X.ndim != 3:
            raise ValueError(f"X must have shape (N, d1, d2), got {X.shape}")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"{X.shape[0]} designs but {Y.shape[0]} responses")
        if Y.shape[0] == 0:
            raise ValueError("empty dataset")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def dims(self):
        return self.X.shape[1], self.X.shape[2]

    @property
    def n_obs(self):
        return self.Y.shape[0]

    def rows(self) -> np.ndarray:
        """Design as an N x (d1 d2) matrix with rows ``vec(X_i)``."""
        N = self.X.shape[0]
        return self.X.transpose(0, 2, 1).reshape(N, -1)

    def to_dense(self):
        return self


@dataclass(frozen=True)
class DiagonalDesign(TraceDataset):
    """Linear model: design vectors ``x`` (N, d) are the diagonals of ``X_i``."""

    x: np.ndarray
    Y: np.ndarray
    kind: str = field(default="diagonal", init=False)

    def __post_init__(self):
        x = _as_float(self.x, "x")
        Y = _as_float(self.Y, "Y").ravel()
        if x.ndim != 2:
            raise ValueError(f"x must have shape (N, d), got {x.shape}")
        if x.shape[0] != Y.shape[0]:
            raise ValueError(f"{x.shape[0]} design rows but {Y.shape[0]} responses")
        if Y.shape[0] == 0:
            raise ValueError("empty dataset")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "Y", Y)

    @property
    def dims(self):
        d = self.x.shape[1]
        return d, d

    @property
    def n_obs(self):
        return self.Y.shape[0]

    def to_dense(self):
        N, d = self.x.shape
        X = np.zeros((N, d, d))
        idx = np.arange(d)
        X[:, idx, idx] = self.x
        return DenseDesign(X, self.Y)


@dataclass(frozen=True)
class SingletonDesign(TraceDataset):
    """Matrix completion: ``X_i = scale * e_{rows[i]} e_{cols[i]}^T``.

    ``scale`` is 1 for the raw singleton design and ``sqrt(d1 d2)`` for the
    rescaled design under which ``||Theta*||_F <= 1``.
    """

    rows: np.ndarray
    cols: np.ndarray
    Y: np.ndarray
    shape: tuple[int, int]
    scale: float = 1.0
    kind: str = field(default="singleton", init=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.intp).ravel()
        cols = np.asarray(self.cols, dtype=np.intp).ravel()
        Y = _as_float(self.Y, "Y").ravel()
        d1, d2 = (int(s) for s in self.shape)
        if not (rows.shape == cols.shape == Y.shape):
            raise ValueError("rows, cols and Y must have the same length")
        if Y.shape[0] == 0:
            raise ValueError("empty dataset")
        if rows.min() < 0 or rows.max() >= d1 or cols.min() < 0 or cols.max() >= d2:
            raise ValueError(f"singleton index out of range for shape {(d1, d2)}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "shape", (d1, d2))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def dims(self):
        return self.shape

    @property
    def n_obs(self):
        return self.Y.shape[0]

    def to_dense(self):
        N = self.n_obs
        X = np.zeros((N,) + self.shape)
        X[np.arange(N), self.rows, self.cols] = self.scale
        return DenseDesign(X, self.Y)


@dataclass(frozen=True)
class MultiResponse(TraceDataset):
    """Multi-task regression ``y_j = Theta*^T x_j + eps_j``.

    ``X`` is n x d1 and ``Y`` is n x d2; each row pair stands for ``d2``
    trace-regression observations, so ``n_obs = n * d2``.
    """

    X: np.ndarray
    Y: np.ndarray
    kind: str = field(default="multiresponse", init=False)

    def __post_init__(self):
        X = _as_float(self.X, "X")
        Y = _as_float(self.Y, "Y")
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.ndim != 2 or Y.ndim != 2:
            raise ValueError("X and Y must be 2-d")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"{X.shape[0]} design rows but {Y.shape[0]} response rows")
        if X.shape[0] == 0:
            raise ValueError("empty dataset")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dims(self):
        return self.X.shape[1], self.Y.shape[1]

    @property
    def n_obs(self):
        return self.n * self.Y.shape[1]

    def to_dense(self):
        n, d1 = self.X.shape
        d2 = self.Y.shape[1]
        X = np.zeros((n, d2, d1, d2))
        for k in range(d2):
            X[:, k, :, k] = self.X
        return DenseDesign(X.reshape(n * d2, d1, d2), self.Y.reshape(-1))
