"""
Experiment configuration and report rows.

ExperimentConfig and CliConfig are pydantic models so that config files and
request bodies are validated in one place; unknown keys are rejected.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

REPORT_COLUMNS = (
    'scenario', 'method', 'n', 'm', 'B', 'mu', 'alpha', 'coord',
    'coverage', 'avg_length', 'avg_time_sec', 'replications', 'seed',
)

Scenario = Literal['truncated_normal_mean', 'logistic_census', 'logistic_synthetic_17d']
Method = Literal['m_out_of_n', 'n_out_of_n', 'blbquant']


def _split_list(value):
    # "1000, 5000" from a key = value file
    if isinstance(value, str):
        return [item.strip() for item in value.split(',') if item.strip()]
    if isinstance(value, (int, float)):
        return [value]
    return value


class ExperimentConfig(BaseModel):
    """A coverage study over the grid n x B x mu"""
    model_config = ConfigDict(extra='forbid', frozen=True)

    scenario: Scenario
    method: Method
    n: List[int] = Field(min_length=1)
    B: Optional[List[int]] = None
    mu: List[float] = Field(min_length=1)
    alpha: float = Field(default=0.05, gt=0.0, lt=0.5)
    replications: int = Field(default=500, ge=1)
    seed: int = 0
    data_path: Optional[str] = None
    m: Optional[int] = Field(default=None, ge=1)
    noise_free: bool = False
    threads: int = Field(default=1, ge=1)
    population_size: int = Field(default=100_000, ge=2)
    b_sigma: Optional[float] = Field(default=None, gt=0.0)
    delta: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    interval_scale: Literal['root_n', 'verbatim'] = 'root_n'

    @field_validator('n', 'B', 'mu', mode='before')
    @classmethod
    def split_lists(cls, value):
        return _split_list(value)

    @field_validator('n')
    @classmethod
    def check_sizes(cls, value: List[int]) -> List[int]:
        if any(n < 2 for n in value):
            raise ValueError(f"every n must be at least 2, got {value}")
        return value

    @field_validator('B')
    @classmethod
    def check_replications(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is not None and (not value or any(b < 1 for b in value)):
            raise ValueError(f"B must be a non-empty list of positive integers, got {value}")
        return value

    @field_validator('mu')
    @classmethod
    def check_budgets(cls, value: List[float]) -> List[float]:
        if any(not mu > 0 for mu in value):
            raise ValueError(f"every mu must be positive, got {value}")
        return value

    @model_validator(mode='after')
    def check_method(self) -> 'ExperimentConfig':
        if self.method == 'm_out_of_n' and self.B is None:
            raise ValueError("the m_out_of_n method needs a B grid")
        if self.data_path is not None and self.scenario != 'logistic_census':
            raise ValueError("data_path only applies to the logistic_census scenario")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump()


class CliConfig(ExperimentConfig):
    """Settings of the `simulate` command: an experiment plus where and how to write the report"""
    output: str = 'report.csv'
    format: Literal['csv', 'json'] = 'csv'

    @classmethod
    def from_text(cls, text: str) -> 'CliConfig':
        """Parse flat `key = value` lines; `#` starts a comment"""
        values: Dict[str, str] = {}
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ValueError(f"line {number}: expected `key = value`, got {line!r}")
            key, value = (part.strip() for part in line.split('=', 1))
            if key in values:
                raise ValueError(f"line {number}: duplicate key {key!r}")
            values[key] = value
        return cls.model_validate(values)

    @classmethod
    def from_file(cls, path: str) -> 'CliConfig':
        with open(path, 'r', encoding='utf-8') as handle:
            return cls.from_text(handle.read())

    def experiment(self) -> ExperimentConfig:
        return ExperimentConfig.model_validate(self.model_dump(exclude={'output', 'format'}))


@dataclass
class ReportRow:
    """One (grid point, coordinate) line of a coverage report"""
    scenario: str
    method: str
    n: int
    m: int
    B: int
    mu: float
    alpha: float
    coord: int
    coverage: float
    avg_length: float
    avg_time_sec: float
    replications: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"coverage must lie in [0, 1], got {self.coverage}")
        if not self.avg_length >= 0:
            raise ValueError(f"average length must be nonnegative, got {self.avg_length}")

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for API responses"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ReportRow':
        return cls(**{key: data[key] for key in REPORT_COLUMNS})
