from typing import Dict, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.stadium.geometry import Domain, StadiumSpec
from app.utils.errors import DomainError

log = logging.getLogger(__name__)

MIN_POINTS_PER_LENGTH = 8.0
WAVELENGTHS_ACROSS = 40.0
WIDTH_FRACTION = 0.08


class WavepacketSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    center: Tuple[float, float] = Field(..., description="Launch point (x0, y0)")
    wavevector: Tuple[float, float] = Field((0.0, 0.0), description="Mean wavevector (kx, ky)")
    width: float = Field(..., gt=0.0, description="Isotropic Gaussian width sigma")

    @property
    def speed(self) -> float:
        return float(np.hypot(*self.wavevector))

    @property
    def mean_kinetic_energy(self) -> float:
        # <p^2>/2 of exp(-r^2/(4 sigma^2) + i k.r) in two dimensions
        return 0.5 * self.speed ** 2 + 1.0 / (4.0 * self.width ** 2)

    @classmethod
    def launch(cls, center: Tuple[float, float], angle_deg: float, speed: float, width: float) -> 'WavepacketSpec':
        angle = np.deg2rad(angle_deg)
        return cls(center=center, wavevector=(speed * np.cos(angle), speed * np.sin(angle)), width=width)


def default_speed(ss: StadiumSpec) -> float:
    """|k| for which ~40 de Broglie wavelengths span the stadium length."""
    return 2.0 * np.pi * WAVELENGTHS_ACROSS / (ss.straight_length + 2.0 * ss.radius)


def default_width(ss: StadiumSpec) -> float:
    return WIDTH_FRACTION * ss.radius


LAUNCH_NAMES = ('bouncing-ball', 'horizontal-scar', 'generic-center', 'generic-offcenter')


def canonical_launches(ss: StadiumSpec, speed: float = None, width: float = None) -> Dict[str, WavepacketSpec]:
    """
    The four reference launches.

    bouncing-ball: centre, 90 deg; horizontal-scar: centre, 0 deg;
    generic-center: centre, 57 deg; generic-offcenter: (0.35 L, 0.3 R), 123 deg.
    """
    speed = default_speed(ss) if speed is None else speed
    width = default_width(ss) if width is None else width
    offcenter = (0.35 * ss.straight_length, 0.3 * ss.radius)
    return {
        'bouncing-ball': WavepacketSpec.launch((0.0, 0.0), 90.0, speed, width),
        'horizontal-scar': WavepacketSpec.launch((0.0, 0.0), 0.0, speed, width),
        'generic-center': WavepacketSpec.launch((0.0, 0.0), 57.0, speed, width),
        'generic-offcenter': WavepacketSpec.launch(offcenter, 123.0, speed, width),
    }


def check_resolution(ws: WavepacketSpec, domain: Domain):
    h = max(domain.grid.dx, domain.grid.dy)
    if ws.width < MIN_POINTS_PER_LENGTH * h:
        raise DomainError(f"width {ws.width} spans fewer than {MIN_POINTS_PER_LENGTH:g} cells of size {h:.4g}")
    if ws.speed > 0 and 2.0 * np.pi / ws.speed < MIN_POINTS_PER_LENGTH * h:
        raise DomainError(
            f"wavelength {2.0 * np.pi / ws.speed:.4g} spans fewer than {MIN_POINTS_PER_LENGTH:g} cells of size {h:.4g}"
        )


def init_wavepacket(ws: WavepacketSpec, domain: Domain) -> np.ndarray:
    """
    Gaussian wavepacket masked to the interior and normalized on the grid.

    Raises:
        DomainError: If the centre is not strictly inside or the packet is under-resolved.
    """
    if not domain.inside(*ws.center):
        raise DomainError(f"wavepacket centre {ws.center} is not inside the stadium")
    check_resolution(ws, domain)
    X, Y = domain.mesh()
    x0, y0 = ws.center
    kx, ky = ws.wavevector
    psi = np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / (4.0 * ws.width ** 2) + 1j * (kx * X + ky * Y))
    psi = np.where(domain.mask, psi, 0.0)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * domain.cell_area)
    return psi


def mean_momentum(psi: np.ndarray, domain: Domain) -> Tuple[float, float]:
    """Spectral first moment (<kx>, <ky>) of a grid wavefunction."""
    weights = np.abs(np.fft.fft2(psi)) ** 2
    KX, KY = domain.wavenumbers()
    total = np.sum(weights)
    return float(np.sum(KX * weights) / total), float(np.sum(KY * weights) / total)


def position_spread(psi: np.ndarray, domain: Domain) -> float:
    """Standard deviation of x under |psi|^2."""
    X, _ = domain.mesh()
    p = np.abs(psi) ** 2
    p = p / np.sum(p)
    mean = np.sum(X * p)
    return float(np.sqrt(np.sum((X - mean) ** 2 * p)))


__all__ = [
    'WavepacketSpec',
    'LAUNCH_NAMES',
    'canonical_launches',
    'default_speed',
    'default_width',
    'init_wavepacket',
    'mean_momentum',
    'position_spread',
]
