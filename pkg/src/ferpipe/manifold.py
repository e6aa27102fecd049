"""Spectral embedding on neighborhood graphs and its supervised, linear
out-of-sample variant.

The unsupervised path builds a sparse neighbor graph, weights it (heat
kernel or 0/1), and solves L y = lambda D y for the smallest nontrivial
eigenvectors. The supervised variant replaces distances with a
label-aware similarity divergence, producing dense weight matrices, and
solves for a linear projection A so new samples map via Y = A^T x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DisconnectedGraphError,
    GraphConstructionError,
    InvalidInputError,
    NumericError,
)


def _check_features(X, min_rows=2) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < min_rows:
        raise InvalidInputError(f"feature matrix must be 2D with >= {min_rows} rows")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("feature matrix contains non-finite entries")
    return X


def _check_labels(labels, n) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise InvalidInputError(f"expected {n} labels, got shape {labels.shape}")
    return labels.astype(np.int64)


# ---------------------------------------------------------------------------
# neighborhood graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NeighborGraph:
    n: int
    edges: frozenset  # pairs (i, j) with i < j
    mode: str
    param: float


def squared_distances(X: np.ndarray) -> np.ndarray:
    sq = (X * X).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def build_graph(X, mode: str = "n-nearest", param: float = 5) -> NeighborGraph:
    """Symmetric neighbor graph; 'n-nearest' joins i,j when either is among
    the other's n closest, 'epsilon' when the squared distance is < param."""
    X = _check_features(X)
    n = X.shape[0]
    if param <= 0:
        raise InvalidInputError("graph parameter must be positive")
    d2 = squared_distances(X)
    edges = set()
    if mode == "n-nearest":
        k = int(param)
        for i in range(n):
            order = np.argsort(d2[i], kind="stable")
            picked = [int(j) for j in order if j != i][:k]
            for j in picked:
                edges.add((min(i, j), max(i, j)))
    elif mode == "epsilon":
        ii, jj = np.nonzero(d2 < param)
        for i, j in zip(ii.tolist(), jj.tolist()):
            if i < j:
                edges.add((i, j))
    else:
        raise InvalidInputError(f"mode must be 'n-nearest' or 'epsilon', got {mode!r}")
    if not edges:
        raise GraphConstructionError(
            f"graph construction ({mode}, param={param}) produced no edges"
        )
    return NeighborGraph(n, frozenset(edges), mode, float(param))


def edge_weights(graph: NeighborGraph, X, scheme: str = "heat", t: float | None = None):
    """Dense symmetric weight matrix: heat kernel exp(-d^2/t) on edges, or
    1 on edges for the parameter-free scheme. Default t is the mean squared
    pairwise distance."""
    X = _check_features(X)
    if X.shape[0] != graph.n:
        raise InvalidInputError("feature matrix does not match graph size")
    W = np.zeros((graph.n, graph.n))
    if scheme == "simple":
        for i, j in graph.edges:
            W[i, j] = W[j, i] = 1.0
        return W
    if scheme != "heat":
        raise InvalidInputError(f"scheme must be 'heat' or 'simple', got {scheme!r}")
    d2 = squared_distances(X)
    if t is None:
        off = d2[~np.eye(graph.n, dtype=bool)]
        t = float(off.mean()) if off.size and off.mean() > 0 else 1.0
    if not (math.isfinite(t) and t > 0):
        raise InvalidInputError("heat parameter t must be finite and positive")
    for i, j in graph.edges:
        W[i, j] = W[j, i] = math.exp(-d2[i, j] / t)
    return W


def connected_components(W: np.ndarray) -> list[list[int]]:
    """Components of the positive-weight graph, each sorted, by first node."""
    n = W.shape[0]
    seen = np.zeros(n, dtype=bool)
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in np.nonzero(W[i] > 0)[0]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        comps.append(sorted(comp))
    return comps


# ---------------------------------------------------------------------------
# unsupervised embedding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeModel:
    embedding: np.ndarray  # n x m, columns are eigenvectors (D-normalized)
    eigenvalues: np.ndarray  # m ascending, trivial 0 excluded


def le_embed(W, m: int) -> LeModel:
    """Solve L y = lambda D y (L = D - W); drop the constant lambda=0 pair
    and return the next m eigenpairs ascending, D-normalized."""
    W = np.asarray(W, dtype=np.float64)
    n = W.shape[0]
    if W.ndim != 2 or W.shape != (n, n):
        raise InvalidInputError("weight matrix must be square")
    if not np.allclose(W, W.T):
        raise InvalidInputError("weight matrix must be symmetric")
    if W.min() < 0 or not np.all(np.isfinite(W)):
        raise InvalidInputError("weights must be finite and non-negative")
    if not (1 <= m <= n - 1):
        raise InvalidInputError(f"target dimension must be in [1, {n - 1}], got {m}")
    comps = connected_components(W)
    if len(comps) > 1:
        raise DisconnectedGraphError(tuple(len(c) for c in comps))
    D = np.diag(W.sum(axis=1))
    L = D - W
    try:
        vals, vecs = scipy.linalg.eigh(L, D)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"generalized eigensolver failed: {exc}") from exc
    # eigh returns D-orthonormal vectors (y^T D y = 1), ascending values
    vals, vecs = vals[1 : m + 1], vecs[:, 1 : m + 1]
    scale = max(1.0, float(np.linalg.norm(L, "fro")))
    for k in range(vecs.shape[1]):
        y = vecs[:, k]
        res = np.linalg.norm(L @ y - vals[k] * (D @ y))
        if res > 1e-8 * scale * np.linalg.norm(y):
            raise NumericError(f"eigen-residual {res:.3e} exceeds tolerance at pair {k}")
    vecs = _fix_signs(vecs)
    return LeModel(vecs, vals.copy())


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for k in range(out.shape[1]):
        idx = int(np.argmax(np.abs(out[:, k])))
        if out[idx, k] < 0:
            out[:, k] = -out[:, k]
    return out


# ---------------------------------------------------------------------------
# supervised divergence weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SdleParams:
    p: float = 10.0
    a: float = 0.5
    penalty: float | None = None  # None: min observed inter-class similarity
    t: float = 1.0
    weight_map: str = "intent"  # 'intent': exp(-(1-S_D)/t); 'literal': exp(-S_D/t)
    ridge: float = 1e-8

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 0):
            raise InvalidInputError("sigmoid steepness p must be positive")
        if not (0.0 < self.a < 1.0):
            raise InvalidInputError("sigmoid midpoint a must lie in (0, 1)")
        if self.penalty is not None and not (math.isfinite(self.penalty) and self.penalty >= 0):
            raise InvalidInputError("penalty must be >= 0")
        if not (math.isfinite(self.t) and self.t > 0):
            raise InvalidInputError("t must be positive")
        if self.weight_map not in ("intent", "literal"):
            raise InvalidInputError("weight_map must be 'intent' or 'literal'")
        if not (math.isfinite(self.ridge) and self.ridge >= 0):
            raise InvalidInputError("ridge must be >= 0")


def similarity(x, y) -> float:
    """(1 + cosine)/2 in [0, 1]; a zero vector gives the uninformative 0.5."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        return 0.5
    cos = float(np.clip(x @ y / (nx * ny), -1.0, 1.0))
    return (1.0 + cos) / 2.0


def similarity_matrix(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1)
    safe = np.where(norms == 0, 1.0, norms)
    cos = (X @ X.T) / np.outer(safe, safe)
    cos[norms == 0, :] = 0.0
    cos[:, norms == 0] = 0.0
    np.clip(cos, -1.0, 1.0, out=cos)
    return (1.0 + cos) / 2.0


def s_d_transform(
    simi_val: float, same_label: bool, p: float = 10.0, a: float = 0.5, penalty: float = 0.0
) -> float:
    """Prize same-class similarity through a sigmoid; punish different-class
    similarity by subtracting the penalty (floored at 0)."""
    if not (math.isfinite(simi_val) and -1e-12 <= simi_val <= 1.0 + 1e-12):
        raise InvalidInputError("similarity value must lie in [0, 1]")
    simi_val = min(max(simi_val, 0.0), 1.0)
    if same_label:
        return 1.0 / (1.0 + math.exp(-p * (simi_val - a)))
    return max(0.0, simi_val - penalty)


def class_indicator(labels) -> tuple[np.ndarray, np.ndarray]:
    """M_ij = 1 iff labels differ (zero diagonal); P = diag of row sums."""
    labels = np.asarray(labels).ravel()
    M = (labels[:, None] != labels[None, :]).astype(np.float64)
    np.fill_diagonal(M, 0.0)
    return M, np.diag(M.sum(axis=1))


def sdle_matrices(X, labels, params: SdleParams = SdleParams()):
    """Dense (W_sd, D, M, P) for the supervised eigenproblem."""
    X = _check_features(X)
    labels = _check_labels(labels, X.shape[0])
    if np.unique(labels).size < 2:
        raise InvalidInputError("supervised weighting needs at least 2 classes")
    simi = similarity_matrix(X)
    M, P = class_indicator(labels)
    penalty = params.penalty
    if penalty is None:
        penalty = float(simi[M > 0].min())
    same = M == 0
    sd = np.where(
        same,
        1.0 / (1.0 + np.exp(-params.p * (simi - params.a))),
        np.maximum(0.0, simi - penalty),
    )
    if params.weight_map == "intent":
        W_sd = np.exp(-(1.0 - sd) / params.t)
    else:
        W_sd = np.exp(-sd / params.t)
    np.fill_diagonal(W_sd, 0.0)
    W_sd = (W_sd + W_sd.T) / 2.0
    D = np.diag(W_sd.sum(axis=1))
    return W_sd, D, M, P


# ---------------------------------------------------------------------------
# supervised linear embedding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SdleModel:
    basis: np.ndarray  # d x r orthonormal pre-projection (rank safety)
    projection: np.ndarray  # r x m, columns are generalized eigenvectors
    eigenvalues: np.ndarray  # m, descending
    params: SdleParams = field(default_factory=SdleParams)

    @property
    def input_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def out_dim(self) -> int:
        return self.projection.shape[1]


def sdle_fit(X, labels, m: int = 83, params: SdleParams = SdleParams()) -> SdleModel:
    """Fit the supervised projection by maximizing inter-class spread under
    the intra-class tie constraint (generalized eigenproblem, top-m
    eigenvectors by descending eigenvalue).

    Raw features are first projected onto an orthonormal basis of their
    row space (rank at most n-1) so the n x n-sized quadratic forms are
    well posed; a relative ridge stabilizes the right-hand matrix.
    """
    X = _check_features(X)
    n, d = X.shape
    if m < 1:
        raise InvalidInputError("target dimension must be >= 1")
    if n < m + 1:
        raise InvalidInputError(f"need at least {m + 1} samples to fit {m} dimensions")
    labels = _check_labels(labels, n)

    try:
        _, svals, Vt = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed during rank-safety projection: {exc}") from exc
    if svals.size == 0 or svals[0] == 0.0:
        raise InvalidInputError("feature matrix is all zeros")
    tol = svals[0] * max(n, d) * np.finfo(np.float64).eps
    r = min(n - 1, int((svals > tol).sum()))
    if m > r:
        raise InvalidInputError(f"target dimension {m} exceeds available rank {r}")
    basis = Vt[:r].T

    W_sd, D, M, P = sdle_matrices(X, labels, params)
    Xp = X @ basis
    G_m = Xp.T @ (P - M) @ Xp
    G_r = Xp.T @ (D - W_sd) @ Xp
    G_m = (G_m + G_m.T) / 2.0
    G_r = (G_r + G_r.T) / 2.0
    reg = params.ridge * max(float(np.trace(G_r)) / r, 1e-300)
    G_reg = G_r + reg * np.eye(r)
    try:
        vals, vecs = scipy.linalg.eigh(G_m, G_reg)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"supervised eigenproblem failed: {exc}") from exc

    vals = vals[::-1][:m].copy()
    vecs = vecs[:, ::-1][:, :m]
    scale = float(np.linalg.norm(G_m, "fro") + np.abs(vals).max() * np.linalg.norm(G_reg, "fro"))
    for k in range(m):
        a = vecs[:, k]
        res = np.linalg.norm(G_m @ a - vals[k] * (G_reg @ a))
        if res > 1e-6 * max(scale, 1.0) * np.linalg.norm(a):
            raise NumericError(f"eigen-residual {res:.3e} exceeds tolerance at pair {k}")
    vecs = _fix_signs(vecs)
    return SdleModel(basis, vecs, vals, params)


def sdle_transform(model: SdleModel, X_new) -> np.ndarray:
    """Out-of-sample mapping Y = A^T x per row; purely linear."""
    X_new = np.asarray(X_new, dtype=np.float64)
    single = X_new.ndim == 1
    if single:
        X_new = X_new[None, :]
    if X_new.ndim != 2 or X_new.shape[1] != model.input_dim:
        raise InvalidInputError(
            f"expected feature dimension {model.input_dim}, got {X_new.shape}"
        )
    if not np.all(np.isfinite(X_new)):
        raise InvalidInputError("feature matrix contains non-finite entries")
    Y = (X_new @ model.basis) @ model.projection
    return Y[0] if single else Y
