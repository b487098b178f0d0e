"""Log-domain reductions backing the stabilized scaling iterations."""

import numpy as np


def log_matvec(log_mat: np.ndarray, log_vec: np.ndarray) -> np.ndarray:
    """log(M @ exp(log_vec)) for M = exp(log_mat), reduced stably over columns."""
    a = log_mat + log_vec[None, :]
    mx = a.max(axis=1)
    return mx + np.log(np.exp(a - mx[:, None]).sum(axis=1))


def log_matvec_t(log_mat: np.ndarray, log_vec: np.ndarray) -> np.ndarray:
    """log(M.T @ exp(log_vec)) without materializing the transpose."""
    a = log_mat + log_vec[:, None]
    mx = a.max(axis=0)
    return mx + np.log(np.exp(a - mx[None, :]).sum(axis=0))


def log_sum(log_vec: np.ndarray) -> float:
    """log(sum(exp(log_vec)))."""
    mx = float(log_vec.max())
    return mx + float(np.log(np.exp(log_vec - mx).sum()))


def log_bilinear(log_mat: np.ndarray, log_u: np.ndarray, log_v: np.ndarray) -> float:
    """log(u.T @ M @ v) for positive u, M, v given in logs."""
    a = log_mat + log_u[:, None] + log_v[None, :]
    mx = float(a.max())
    return mx + float(np.log(np.exp(a - mx).sum()))
