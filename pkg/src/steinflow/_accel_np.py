"""Pure-numpy fallback for the compiled accelerator.

Same contract as steinflow._accel; used when the extension is not built or
when STEINFLOW_BACKEND=numpy is set.
"""

import numpy as np


def pairwise_sq_dists(x):
    """All pairwise squared Euclidean distances of the rows of x, as an n-by-n array."""
    diff = x[:, None, :] - x[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def gram_gaussian(x, sigma2):
    """Gram matrix of exp(-|x_i - x_j|^2 / (2 sigma2)); unit diagonal by construction."""
    k = np.exp(pairwise_sq_dists(x) / (-2.0 * sigma2))
    np.fill_diagonal(k, 1.0)
    return k
