"""Pure numpy implementations of the compiled kernels in ``_core``."""
import numpy as np

_CHUNK_ELEMS = 1 << 22


def pairwise_distances(x, n_threads=0):
    n, dim = x.shape
    out = np.empty((n, n), dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // max(1, n * dim))
    for start in range(0, n, step):
        stop = min(n, start + step)
        diff = x[start:stop, None, :] - x[None, :, :]
        out[start:stop] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    # einsum may reorder the reduction across chunk shapes; mirror the upper
    # triangle so symmetry and the zero diagonal hold exactly
    iu = np.triu_indices(n, 1)
    out[(iu[1], iu[0])] = out[iu]
    np.fill_diagonal(out, 0.0)
    return out


def gnsa_rows(z, ref, nz, eps_dist=1e-12, tie_tol=0.0, n_threads=0):
    d = pairwise_distances(z)
    diff = d / nz - ref
    s = np.sign(diff)
    s[np.abs(diff) <= tie_tol] = 0.0
    np.fill_diagonal(s, 0.0)
    s_rows = (s * d).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(d > eps_dist, s / d, 0.0)
    g = w.sum(axis=1)[:, None] * z - w @ z
    return g, s_rows
