"""
Stadium geometry and the simulation grid.

The stadium is centred at the origin: a rectangle of length L (along x) and
height 2R with two radius-R semicircular end caps centred at (+-L/2, 0). Its
signed distance function is |p - segment| - R where the segment joins
(-L/2, 0) and (L/2, 0); L = 0 gives a circle.

Grid points are cell-centred, x_j = x_min + (j + 1/2) dx, so a box symmetric
about the origin maps onto itself under both reflections.
"""
from dataclasses import dataclass
from typing import Optional, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.utils.errors import DomainError

log = logging.getLogger(__name__)

HBAR_SI = 1.054571817e-34
ELECTRON_MASS_KG = 9.1093837015e-31
WALL_FACTOR = 1e3
WALL_RAMP_CELLS = 2.0


class StadiumSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    straight_length: float = Field(2.0, ge=0.0, description="Length L of the straight segment")
    radius: float = Field(1.0, gt=0.0, description="Radius R of the end caps")
    wall_height: Optional[float] = Field(
        None, gt=0.0, description="Potential outside the stadium; defaults to 1e3 x the packet's mean kinetic energy"
    )

    @property
    def is_circle(self) -> bool:
        return self.straight_length == 0.0

    @property
    def area(self) -> float:
        return np.pi * self.radius ** 2 + 2.0 * self.radius * self.straight_length

    @property
    def half_extent(self) -> Tuple[float, float]:
        return self.straight_length / 2.0 + self.radius, self.radius

    def signed_distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Negative inside, positive outside, zero on the wall."""
        along = np.clip(np.abs(x) - self.straight_length / 2.0, 0.0, None)
        return np.hypot(along, y) - self.radius


class UnitSystem(BaseModel):
    """Optional physical mapping of the dimensionless units (hbar = m = 1), for labels only."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    mass_kg: float = Field(ELECTRON_MASS_KG, gt=0.0)
    length_m: float = Field(1e-9, gt=0.0)

    @property
    def time_unit_fs(self) -> float:
        return self.mass_kg * self.length_m ** 2 / HBAR_SI * 1e15

    def to_femtoseconds(self, t):
        return np.asarray(t) * self.time_unit_fs


class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    nx: int = Field(512, gt=1)
    ny: int = Field(256, gt=1)
    extent: Tuple[float, float, float, float] = (-2.25, 2.25, -1.25, 1.25)
    dt: Optional[float] = Field(None, gt=0.0)
    phase_budget: float = Field(0.1, gt=0.0, description="Largest kinetic phase per step, dt * E_max")
    units: Optional[UnitSystem] = None

    @field_validator('nx', 'ny')
    @classmethod
    def _power_of_two(cls, v: int) -> int:
        if v & (v - 1):
            raise ValueError(f"grid size must be a power of two, got {v}")
        return v

    @model_validator(mode='after')
    def _check(self) -> 'GridSpec':
        x0, x1, y0, y1 = self.extent
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"extent must be (x_min, x_max, y_min, y_max) with positive size, got {self.extent}")
        if self.dt is not None and self.dt * self.kinetic_max > self.phase_budget * (1.0 + 1e-12):
            raise ValueError(
                f"dt={self.dt} gives a kinetic phase {self.dt * self.kinetic_max:.3g} per step, "
                f"above the budget {self.phase_budget}"
            )
        return self

    @property
    def dx(self) -> float:
        return (self.extent[1] - self.extent[0]) / self.nx

    @property
    def dy(self) -> float:
        return (self.extent[3] - self.extent[2]) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def kinetic_max(self) -> float:
        return 0.5 * ((np.pi / self.dx) ** 2 + (np.pi / self.dy) ** 2)

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else self.phase_budget / self.kinetic_max

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        x0, _, y0, _ = self.extent
        return x0 + (np.arange(self.nx) + 0.5) * self.dx, y0 + (np.arange(self.ny) + 0.5) * self.dy


@dataclass(frozen=True)
class Domain:
    grid: GridSpec
    stadium: Optional[StadiumSpec]
    x: np.ndarray
    y: np.ndarray
    potential: np.ndarray
    mask: np.ndarray
    wall_height: float

    @property
    def shape(self) -> Tuple[int, int]:
        return self.grid.nx, self.grid.ny

    @property
    def cell_area(self) -> float:
        return self.grid.cell_area

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing='ij')

    def wavenumbers(self) -> Tuple[np.ndarray, np.ndarray]:
        kx = 2.0 * np.pi * np.fft.fftfreq(self.grid.nx, d=self.grid.dx)
        ky = 2.0 * np.pi * np.fft.fftfreq(self.grid.ny, d=self.grid.dy)
        return np.meshgrid(kx, ky, indexing='ij')

    def inside(self, x: float, y: float) -> bool:
        if self.stadium is None:
            x0, x1, y0, y1 = self.grid.extent
            return x0 < x < x1 and y0 < y < y1
        return bool(self.stadium.signed_distance(np.asarray(x), np.asarray(y)) < 0.0)

    @classmethod
    def free(cls, gs: GridSpec) -> 'Domain':
        """Field-free periodic box: zero potential, every cell inside."""
        x, y = gs.axes()
        return cls(gs, None, x, y, np.zeros((gs.nx, gs.ny)), np.ones((gs.nx, gs.ny), dtype=bool), 0.0)


def build_domain(ss: StadiumSpec, gs: GridSpec, sigma: Optional[float] = None,
                 kinetic_energy: Optional[float] = None) -> Domain:
    """
    Builds the mask and hard-wall potential of a stadium on a grid.

    Args:
        ss: Stadium geometry.
        gs: Simulation grid.
        sigma: Width of the planned wavepacket; the box must leave a margin of 4*sigma.
        kinetic_energy: Mean kinetic energy of the planned wavepacket, used for
            the default wall height when `ss.wall_height` is unset.

    Returns:
        Domain with potential 0 inside, rising over two cells to V0 outside.

    Raises:
        DomainError: If the stadium does not fit the box or no wall height can be set.
    """
    margin = 4.0 * sigma if sigma else 0.0
    hx, hy = ss.half_extent
    x0, x1, y0, y1 = gs.extent
    if x0 > -hx - margin or x1 < hx + margin or y0 > -hy - margin or y1 < hy + margin:
        raise DomainError(
            f"stadium with half extent ({hx}, {hy}) and margin {margin:.3g} does not fit the box {gs.extent}"
        )
    if ss.wall_height is not None:
        v0 = ss.wall_height
    elif kinetic_energy is not None and kinetic_energy > 0:
        v0 = WALL_FACTOR * kinetic_energy
    else:
        raise DomainError("wall height is unset and no kinetic energy was given to derive it")

    x, y = gs.axes()
    X, Y = np.meshgrid(x, y, indexing='ij')
    distance = ss.signed_distance(X, Y)
    ramp = WALL_RAMP_CELLS * max(gs.dx, gs.dy)
    potential = v0 * np.clip(distance / ramp, 0.0, 1.0)
    mask = potential == 0.0
    log.debug('build_domain grid=%dx%d V0=%.4g inside=%d cells', gs.nx, gs.ny, v0, int(mask.sum()))
    return Domain(gs, ss, x, y, potential, mask, float(v0))


__all__ = ['StadiumSpec', 'UnitSystem', 'GridSpec', 'Domain', 'build_domain']
