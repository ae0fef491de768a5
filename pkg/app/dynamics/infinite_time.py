"""
Infinite-time averages through the diagonal ensemble.

For a nondegenerate spectrum the T -> infinity average of |<b|a(t)>|^2 equals
sum_n |<a|phi_n>|^2 |<phi_n|b>|^2. When the eigensystem carries the
degeneracy flag, amplitudes are first summed inside each degenerate level
group, which replaces eigenvector projectors by degenerate-subspace
projectors. Both cases share one code path: a group of one level reduces to
the plain formula.
"""
from dataclasses import dataclass
from typing import Optional
import logging

import numpy as np

from app.dynamics.states import StateLike, as_amplitudes
from app.spectral.eigen import EigenSystem
from app.utils.errors import InvalidDimensionError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InfiniteTimeProfile:
    site_probs: np.ndarray
    block_alpha: float
    block_beta: float
    ratio: float
    excluded_site: Optional[int] = None


def _group(es: EigenSystem, x: np.ndarray) -> np.ndarray:
    if not es.degenerate:
        return x
    return np.add.reduceat(x, es.cluster_starts(), axis=-1)


def infinite_time_joint(es: EigenSystem, a: StateLike, b: StateLike) -> float:
    """
    Joint probability P^{ab} = N * sum_n |<a|phi_n>|^2 |<phi_n|b>|^2.

    The ergodic value is 1; the RMT value of P^{aa} is 3 (GOE) or 2 (GUE).
    """
    c = es.coefficients(as_amplitudes(a))
    d = es.coefficients(as_amplitudes(b))
    overlap = _group(es, np.conj(d) * c)
    return float(es.n * np.sum(np.abs(overlap) ** 2))


def site_probabilities(es: EigenSystem, a0: StateLike) -> np.ndarray:
    """P(a|b_i) for every site i."""
    c = es.coefficients(as_amplitudes(a0))
    weighted = _group(es, es.vectors * c[None, :])
    return np.sum(np.abs(weighted) ** 2, axis=1)


def infinite_time_profile(es: EigenSystem, a0: StateLike, n_alpha: Optional[int] = None,
                          exclude_initial_site: bool = False,
                          initial_site: Optional[int] = None) -> InfiniteTimeProfile:
    """
    Site-resolved and block-averaged infinite-time probabilities.

    Args:
        es: Eigensystem of the block model.
        a0: Initial state.
        n_alpha: Size of block alpha; taken from the eigensystem's layout when omitted.
        exclude_initial_site: Leave the initial site out of the alpha average.
        initial_site: Site treated as the initial one; defaults to the site
            carrying the largest weight of `a0`.

    Returns:
        InfiniteTimeProfile; the ratio is +inf when block beta carries no weight.
    """
    if n_alpha is None:
        if es.blocks is None:
            raise InvalidDimensionError("n_alpha is required when the eigensystem has no block layout")
        n_alpha = es.blocks.n_alpha
    if not 1 <= n_alpha < es.n:
        raise InvalidDimensionError(f"n_alpha must lie in [1, {es.n - 1}], got {n_alpha}")

    amps = as_amplitudes(a0)
    probs = site_probabilities(es, amps)
    alpha = probs[:n_alpha]
    excluded = None
    if exclude_initial_site:
        excluded = int(np.argmax(np.abs(amps) ** 2)) if initial_site is None else int(initial_site)
        if excluded < n_alpha and n_alpha > 1:
            alpha = np.delete(alpha, excluded)
    block_alpha = float(np.mean(alpha))
    block_beta = float(np.mean(probs[n_alpha:]))
    ratio = block_alpha / block_beta if block_beta > 0.0 else float('inf')
    log.debug('infinite_time_profile alpha=%.4e beta=%.4e ratio=%.4g', block_alpha, block_beta, ratio)
    return InfiniteTimeProfile(probs, block_alpha, block_beta, ratio, excluded)


__all__ = ['InfiniteTimeProfile', 'infinite_time_joint', 'infinite_time_profile', 'site_probabilities']
