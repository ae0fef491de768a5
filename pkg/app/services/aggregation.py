from dataclasses import dataclass
from typing import Iterable, Mapping, Tuple, Union
import logging
import math

from app.schemas.result import EnsembleStat
from app.utils.errors import InsufficientDataError

log = logging.getLogger(__name__)

PerRealization = Union[Mapping[int, float], Iterable[Tuple[int, float]]]


@dataclass(frozen=True)
class EnsembleAverage:
    mean: float
    stderr: float
    n: int

    @property
    def single(self) -> bool:
        return self.n == 1

    def to_stat(self) -> EnsembleStat:
        return EnsembleStat(mean=self.mean, stderr=self.stderr, n=self.n, single=self.single)


def ensemble_average(per_realization: PerRealization) -> EnsembleAverage:
    """
    Mean and standard error of per-realization scalars.

    Values are summed with math.fsum in ascending stream-id order, so any
    permutation of the input gives bit-identical output.

    Args:
        per_realization: Mapping or pairs of (stream_id, value).

    Returns:
        EnsembleAverage; stderr is the ddof=1 sample deviation over sqrt(n),
        0 for a single realization.

    Raises:
        InsufficientDataError: If there are no values.
    """
    items = per_realization.items() if isinstance(per_realization, Mapping) else per_realization
    values = [float(v) for _, v in sorted(items, key=lambda kv: kv[0])]
    n = len(values)
    if n == 0:
        raise InsufficientDataError("ensemble average over zero realizations")
    mean = math.fsum(values) / n
    if n == 1:
        log.debug('ensemble_average over a single realization, standard error set to 0')
        return EnsembleAverage(mean, 0.0, 1)
    if not all(math.isfinite(v) for v in values):
        log.warning('ensemble_average: non-finite realization values, standard error undefined')
        return EnsembleAverage(mean, float('nan'), n)
    variance = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return EnsembleAverage(mean, math.sqrt(variance / n), n)


__all__ = ['EnsembleAverage', 'ensemble_average']
