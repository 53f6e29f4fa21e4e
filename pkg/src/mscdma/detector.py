"""Weight design and output SINR of rank-L multistage detectors."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

COND_LIMIT = 1e12


class DesignError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DetectorDesign:
    rank: int
    xi_matrix: np.ndarray
    xi_vector: np.ndarray
    weights: np.ndarray
    sinr: float

    @property
    def sinr_db(self):
        return to_db(self.sinr)


def to_db(x):
    return 10.0 * np.log10(x)


def from_db(x):
    return 10.0 ** (np.asarray(x) / 10.0)


def moment_inputs(R, noise_variance, rank):
    """``Xi[i, j] = R[i+j] + s2 R[i+j-1]`` and ``xi[i] = R[i]`` (1-based i, j).

    ``R`` is any sequence with ``R[0] == 1`` and at least ``2 rank + 1`` entries.
    """
    R = np.asarray(R, dtype=float)
    need = 2 * rank
    if R.size < need + 1:
        raise DesignError(f"rank {rank} needs moments up to order {need}, table has depth {R.size - 1}")
    i = np.arange(1, rank + 1)
    idx = i[:, None] + i[None, :]
    return R[idx] + noise_variance * R[idx - 1], R[i].copy()


def build_moment_inputs(table, class_index, noise_variance, rank):
    return moment_inputs(table.R[class_index], noise_variance, rank)


def _equilibrated_condition(Xi):
    d = 1.0 / np.sqrt(np.abs(np.diag(Xi)))
    return np.linalg.cond(Xi * d[:, None] * d[None, :]), d


def mmse_weights(Xi, xi, ridge=False):
    """Wiener-Hopf solution ``Xi^-1 xi`` via a Cholesky factorization.

    The condition number is checked after symmetric diagonal scaling, since
    raw moment matrices mix entries of very different size.  With ``ridge``
    a Tikhonov term ``1e-12 trace/L`` is added to the scaled matrix (whose
    diagonal is one) before solving and the condition guard is skipped.
    """
    Xi = np.asarray(Xi, dtype=float)
    xi = np.asarray(xi, dtype=float)
    L = xi.size
    cond, d = _equilibrated_condition(Xi)
    S = Xi * d[:, None] * d[None, :]
    if ridge:
        S = S + 1e-12 * np.trace(S) / L * np.eye(L)
    elif not cond < COND_LIMIT:
        raise DesignError(
            f"moment matrix is ill-conditioned (cond {cond:.3g} after scaling, rank {L}); "
            "reduce the rank or enable the ridge option"
        )
    # solve the scaled system, then undo the scaling
    y = linalg.cho_solve(linalg.cho_factor(S), xi * d)
    return y * d


def sinr_general(weights, Xi, xi):
    """Output SINR of an arbitrary weight vector (invariant to its scale)."""
    w = np.asarray(weights, dtype=float)
    sig = float(w @ xi) ** 2
    den = float(w @ Xi @ w) - sig
    if not den > 0:
        raise DesignError(f"interference-plus-noise power {den!r} is not positive")
    return sig / den


def sinr_wiener(Xi, xi):
    """SINR ``q / (1 - q)`` of the Wiener design, ``q = xi' Xi^-1 xi``."""
    q = float(xi @ mmse_weights(Xi, xi))
    if not q < 1:
        raise DesignError(f"q = {q!r} >= 1: numerical breakdown")
    return q / (1 - q)


def _design(Xi, xi, weights):
    return DetectorDesign(xi.size, Xi, xi, weights, sinr_general(weights, Xi, xi))


def wiener_design(table, noise_variance, rank, class_index=0):
    Xi, xi = build_moment_inputs(table, class_index, noise_variance, rank)
    return _design(Xi, xi, mmse_weights(Xi, xi))


def polynomial_expansion_design(table, noise_variance, rank, class_index=None):
    """Common weights from the eigenvalue moments.

    Returns the design evaluated for ``class_index`` when given; otherwise
    the design evaluated on the averaged moments.
    """
    Xi_m, xi_m = moment_inputs(table.m, noise_variance, rank)
    w = mmse_weights(Xi_m, xi_m)
    if class_index is None:
        return _design(Xi_m, xi_m, w)
    Xi, xi = build_moment_inputs(table, class_index, noise_variance, rank)
    return _design(Xi, xi, w)


def wiener_sinr_curve(R, noise_variance, ranks):
    out = []
    for L in ranks:
        Xi, xi = moment_inputs(R, noise_variance, L)
        out.append(sinr_wiener(Xi, xi))
    return np.array(out)
