"""
Block-structured random-matrix models.

Both models start from one joint GOE draw of dimension N_alpha + N_beta and
modify only the alpha-beta off-diagonal block; the diagonal blocks are left
untouched.

- Model A keeps an N_c x N_c corner of the off-diagonal block where the two
  blocks meet (rows N_alpha-N_c..N_alpha-1, columns N_alpha..N_alpha+N_c-1)
  and zeroes the rest.
- Model B multiplies the whole off-diagonal block by lambda.
"""
import logging

from app.rmt.ensembles import BlockLayout, Hamiltonian, goe_entries
from app.rmt.streams import RandomStream
from app.utils.errors import InvalidCouplingError, InvalidDimensionError

log = logging.getLogger(__name__)


def _check_blocks(n_alpha: int, n_beta: int):
    if n_alpha < 1 or n_beta < 1:
        raise InvalidDimensionError(f"block sizes must be >= 1, got n_alpha={n_alpha}, n_beta={n_beta}")


def build_model_a(n_alpha: int, n_beta: int, n_c: int, rs: RandomStream) -> Hamiltonian:
    """
    Builds the connection-block model.

    Args:
        n_alpha: Size of the small block.
        n_beta: Size of the large block.
        n_c: Width of the connection corner, 1 <= n_c <= min(n_alpha, n_beta).
        rs: Random stream for the underlying GOE draw.

    Returns:
        Hamiltonian with block metadata.

    Raises:
        InvalidCouplingError: If `n_c` is out of range.
    """
    _check_blocks(n_alpha, n_beta)
    if not 1 <= n_c <= min(n_alpha, n_beta):
        raise InvalidCouplingError(
            f"connection width must lie in [1, {min(n_alpha, n_beta)}], got {n_c}"
        )
    h = goe_entries(n_alpha + n_beta, rs)
    na = n_alpha
    keep = h[na - n_c:na, na:na + n_c].copy()
    h[:na, na:] = 0.0
    h[na:, :na] = 0.0
    h[na - n_c:na, na:na + n_c] = keep
    h[na:na + n_c, na - n_c:na] = keep.T
    log.debug('build_model_a n_alpha=%d n_beta=%d n_c=%d', n_alpha, n_beta, n_c)
    return Hamiltonian(h, ensemble='goe', blocks=BlockLayout(n_alpha, n_beta, connection_width=n_c), stream=rs)


def build_model_b(n_alpha: int, n_beta: int, lam: float, rs: RandomStream) -> Hamiltonian:
    """
    Builds the scaled-coupling model.

    Args:
        n_alpha: Size of the small block.
        n_beta: Size of the large block.
        lam: Non-negative factor applied to the off-diagonal blocks V and V^T.
        rs: Random stream for the underlying GOE draw.

    Returns:
        Hamiltonian with block metadata.

    Raises:
        InvalidCouplingError: If `lam` is negative.
    """
    _check_blocks(n_alpha, n_beta)
    if not lam >= 0:
        raise InvalidCouplingError(f"coupling scale must be >= 0, got {lam}")
    h = goe_entries(n_alpha + n_beta, rs)
    na = n_alpha
    if lam != 1.0:
        h[:na, na:] *= lam
        h[na:, :na] *= lam
    log.debug('build_model_b n_alpha=%d n_beta=%d lambda=%g', n_alpha, n_beta, lam)
    return Hamiltonian(h, ensemble='goe', blocks=BlockLayout(n_alpha, n_beta, coupling_scale=float(lam)), stream=rs)


__all__ = ['build_model_a', 'build_model_b']
