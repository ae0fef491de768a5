from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Annotated, List, Literal, Optional, Tuple, Union, get_args

from app.stadium.wavepacket import LAUNCH_NAMES

ExperimentKind = Literal[
    'goe-factor',
    'gue-factor',
    'model-a-sweep',
    'model-b-sweep',
    'saturation',
    'stadium',
    'spectral-characterization',
    'qb-prediction',
]
EXPERIMENT_KINDS: Tuple[str, ...] = get_args(ExperimentKind)

_STRICT = ConfigDict(extra='forbid', frozen=True)


def _check_corner(model: str, n_c: int, n_alpha: int, n_beta: int):
    if model in ('a', 'model-a') and n_c > min(n_alpha, n_beta):
        raise ValueError(f"n_c={n_c} exceeds a block size ({n_alpha}, {n_beta})")


class EnhancementParams(BaseModel):
    model_config = _STRICT

    kind: Literal['goe-factor', 'gue-factor']
    n: int = Field(600, ge=2, description="Matrix dimension")
    pairs: int = Field(50, ge=1, description="Random basis-state pairs (a, b), a != b, per realization")
    evolved_times: List[float] = Field(default_factory=list, description="Times at which N*P^{a,a(t)} is reported")


class ModelASweepParams(BaseModel):
    model_config = _STRICT

    kind: Literal['model-a-sweep']
    n_alpha: int = Field(100, ge=1, description="Size of block alpha")
    n_c: int = Field(1, ge=1, description="Width of the connection corner")
    n_beta: List[int] = Field([200, 400, 800], min_length=1, description="Sweep over the size of block beta")
    initial_site: int = Field(0, ge=0, description="Basis state the system starts in")
    exclude_initial_site: bool = Field(False, description="Leave the initial site out of the alpha average")

    @model_validator(mode='after')
    def _check(self) -> 'ModelASweepParams':
        if self.n_c > min([self.n_alpha] + self.n_beta):
            raise ValueError(f"n_c={self.n_c} exceeds a block size")
        if any(nb < 1 for nb in self.n_beta):
            raise ValueError("n_beta values must be positive")
        if self.initial_site >= self.n_alpha:
            raise ValueError(f"initial_site must lie in block alpha [0, {self.n_alpha - 1}]")
        return self


class ModelBSweepParams(BaseModel):
    model_config = _STRICT

    kind: Literal['model-b-sweep']
    n_alpha: int = Field(100, ge=1)
    n_beta: int = Field(400, ge=1)
    lam: List[float] = Field([0.05, 0.1, 0.2], min_length=1, description="Sweep over the coupling scale lambda")
    initial_site: int = Field(0, ge=0)
    exclude_initial_site: bool = False

    @model_validator(mode='after')
    def _check(self) -> 'ModelBSweepParams':
        if any(x < 0 for x in self.lam):
            raise ValueError("lam values must be non-negative")
        if self.initial_site >= self.n_alpha:
            raise ValueError(f"initial_site must lie in block alpha [0, {self.n_alpha - 1}]")
        return self


class SaturationParams(BaseModel):
    model_config = _STRICT

    kind: Literal['saturation']
    model: Literal['a', 'b'] = 'b'
    n_alpha: int = Field(100, ge=1)
    n_beta: int = Field(400, ge=1)
    n_c: int = Field(1, ge=1)
    lam: float = Field(0.1, ge=0.0)
    initial_site: int = Field(0, ge=0)
    t_min_factor: float = Field(1e-4, gt=0.0, description="First sample time in units of the Heisenberg time")
    t_max_factor: float = Field(50.0, gt=0.0, description="Last sample time in units of the Heisenberg time")
    points: int = Field(2000, ge=10, description="Log-spaced sample count")
    route: Literal['direct', 'purity'] = Field('direct', description="How N(t) is evaluated")
    window_fraction: float = Field(0.5, gt=0.0)
    epsilon: float = Field(0.05, gt=0.0)

    @model_validator(mode='after')
    def _check(self) -> 'SaturationParams':
        _check_corner(self.model, self.n_c, self.n_alpha, self.n_beta)
        if not self.t_min_factor < self.t_max_factor:
            raise ValueError("t_min_factor must be below t_max_factor")
        if self.initial_site >= self.n_alpha:
            raise ValueError(f"initial_site must lie in block alpha [0, {self.n_alpha - 1}]")
        return self


class StadiumParams(BaseModel):
    model_config = _STRICT

    kind: Literal['stadium']
    straight_length: float = Field(2.0, ge=0.0)
    radius: float = Field(1.0, gt=0.0)
    wall_height: Optional[float] = Field(None, gt=0.0)
    nx: int = 512
    ny: int = 256
    extent: Tuple[float, float, float, float] = (-2.25, 2.25, -1.25, 1.25)
    dt: Optional[float] = Field(None, gt=0.0)
    phase_budget: float = Field(0.1, gt=0.0)
    launches: List[str] = Field(list(LAUNCH_NAMES), min_length=1, description="Canonical launch names")
    speed: Optional[float] = Field(None, gt=0.0, description="|k|; defaults to ~40 wavelengths over the stadium")
    width: Optional[float] = Field(None, gt=0.0, description="Packet width; defaults to 0.08 R")
    t_total: float = Field(0.5, gt=0.0)
    exclude_fraction: float = Field(1.0 / 60.0, ge=0.0, lt=1.0, description="t_exclude / t_total")
    snapshot_times: List[float] = Field(default_factory=list)
    checkpoints: List[float] = Field(default_factory=list)
    record_every: int = Field(10, ge=1)
    window_fraction: float = Field(0.5, gt=0.0)
    epsilon: float = Field(0.05, gt=0.0)
    physical_units: bool = Field(False, description="Add a femtosecond column (electron mass, 1 nm)")

    @field_validator('launches')
    @classmethod
    def _known_launches(cls, v: List[str]) -> List[str]:
        unknown = sorted(set(v) - set(LAUNCH_NAMES))
        if unknown:
            raise ValueError(f"unknown launches {unknown}, expected a subset of {list(LAUNCH_NAMES)}")
        if len(set(v)) != len(v):
            raise ValueError("launches must be unique")
        return v


class SpectralParams(BaseModel):
    model_config = _STRICT

    kind: Literal['spectral-characterization']
    model: Literal['goe', 'gue', 'poisson', 'model-a', 'model-b'] = 'goe'
    n: int = Field(1000, ge=2, description="Dimension of goe, gue and poisson spectra")
    n_alpha: int = Field(100, ge=1)
    n_beta: int = Field(400, ge=1)
    n_c: int = Field(1, ge=1)
    lam: float = Field(0.1, ge=0.0)
    bins: int = Field(50, ge=2)
    discard_fraction: float = Field(0.05, ge=0.0, lt=0.5)
    mixing_threshold: float = Field(10.0, gt=1.0)

    @model_validator(mode='after')
    def _check(self) -> 'SpectralParams':
        _check_corner(self.model, self.n_c, self.n_alpha, self.n_beta)
        return self


class QbPredictionParams(BaseModel):
    model_config = _STRICT

    kind: Literal['qb-prediction']
    model: Literal['goe', 'gue', 'model-a', 'model-b'] = 'model-a'
    n: int = Field(400, ge=2, description="Dimension of goe and gue systems")
    n_alpha: int = Field(100, ge=1)
    n_beta: int = Field(400, ge=1)
    n_c: int = Field(1, ge=1)
    lam: float = Field(0.1, ge=0.0)
    a_site: int = Field(0, ge=0)
    b_site: Optional[int] = Field(None, ge=0, description="Target site; defaults to a_site (return probability)")
    tau: Optional[float] = Field(None, gt=0.0, description="Cutoff time; defaults to tau_fraction * t_H")
    tau_fraction: float = Field(0.1, gt=0.0, lt=1.0)
    thouless_time: Optional[float] = Field(None, gt=0.0, description="Overrides the golden-rule estimate")
    reference_size: int = Field(10, ge=1, description="Plain RMT realizations in the reference ensemble")

    @model_validator(mode='after')
    def _check(self) -> 'QbPredictionParams':
        _check_corner(self.model, self.n_c, self.n_alpha, self.n_beta)
        return self


ExperimentParams = Annotated[
    Union[
        EnhancementParams,
        ModelASweepParams,
        ModelBSweepParams,
        SaturationParams,
        StadiumParams,
        SpectralParams,
        QbPredictionParams,
    ],
    Field(discriminator='kind'),
]


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    kind: ExperimentKind = Field(..., description="Experiment to run")
    seed: int = Field(0, ge=0, lt=2 ** 64, description="Master seed shared by all realizations")
    seeds: List[int] = Field([0], min_length=1, description="Realization stream ids")
    jobs: Optional[int] = Field(None, ge=1, description="Worker count; falls back to QB_JOBS")
    outputs: Optional[str] = Field(None, description="Output directory; falls back to QB_OUTPUT_ROOT/<kind>")
    dump_matrices: bool = Field(False, description="Write QBH1 dumps of every sampled Hamiltonian")
    parameters: ExperimentParams

    @model_validator(mode='before')
    @classmethod
    def _tag_parameters(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            params = dict(data.get('parameters') or {})
            if 'kind' in data:
                params.setdefault('kind', data['kind'])
            data['parameters'] = params
        return data

    @field_validator('seeds')
    @classmethod
    def _unique_seeds(cls, v: List[int]) -> List[int]:
        if len(set(v)) != len(v):
            raise ValueError("seeds must be unique")
        if any(s < 0 or s >= 2 ** 64 for s in v):
            raise ValueError("seeds must be unsigned 64-bit integers")
        return v

    @model_validator(mode='after')
    def _kinds_agree(self) -> 'ExperimentConfig':
        if self.parameters.kind != self.kind:
            raise ValueError(f"parameters are for '{self.parameters.kind}', not '{self.kind}'")
        return self
