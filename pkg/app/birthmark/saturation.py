from typing import Optional
import logging

import numpy as np

from app.dynamics.states import TimeSeries
from app.utils.errors import InsufficientDataError

log = logging.getLogger(__name__)

MIN_WINDOW_SAMPLES = 10
DEFAULT_WINDOW_FRACTION = 0.5
DEFAULT_EPSILON = 0.05


def _relative_spread(values: np.ndarray) -> float:
    spread = float(np.max(values) - np.min(values))
    scale = abs(float(np.mean(values)))
    if scale == 0.0:
        return 0.0 if spread == 0.0 else float('inf')
    return spread / scale


def detect_saturation(ts: TimeSeries, window_fraction: float = DEFAULT_WINDOW_FRACTION,
                      epsilon: float = DEFAULT_EPSILON,
                      min_samples: int = MIN_WINDOW_SAMPLES) -> Optional[float]:
    """
    Earliest time after which the series stays flat.

    A candidate time t_k is tested on the window [t_k, t_k * (1 + window_fraction)],
    widened to `min_samples` samples when it holds fewer. Only candidates whose
    window fits inside the series are considered, plus one closing window
    [t_end / (1 + window_fraction), t_end]. The result is the first candidate
    from which every later window has a relative spread (max - min) / |mean|
    below `epsilon`.

    Returns:
        The saturation time, or None if the series never settles.

    Raises:
        InsufficientDataError: If the series cannot fill a single window.
    """
    times, values = ts.times, ts.values
    n = len(ts)
    if n < min_samples:
        raise InsufficientDataError(f"series has {n} samples, need at least {min_samples}")

    t_end = times[-1]
    flags = []
    candidates = []
    for k in range(n):
        reach = times[k] * (1.0 + window_fraction)
        if reach > t_end:
            break
        stop = max(int(np.searchsorted(times, reach, side='right')), k + min_samples)
        if stop > n:
            break
        candidates.append(k)
        flags.append(_relative_spread(values[k:stop]) < epsilon)

    if not candidates:
        raise InsufficientDataError("no saturation window fits inside the series")

    # the final window always reaches the last sample
    tail = min(int(np.searchsorted(times, t_end / (1.0 + window_fraction), side='left')), n - min_samples)
    tail_flat = _relative_spread(values[tail:]) < epsilon
    if tail <= candidates[-1]:
        flags[-1] = flags[-1] and tail_flat
    else:
        candidates.append(tail)
        flags.append(tail_flat)

    settled = np.logical_and.accumulate(np.asarray(flags)[::-1])[::-1]
    if not settled[-1]:
        log.debug('detect_saturation: series still moving at the last window')
        return None
    first = int(np.argmax(settled))
    return float(times[candidates[first]])


__all__ = ['detect_saturation']
