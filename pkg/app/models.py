"""
Pydantic models for structured data representation
"""
from typing import List, Optional, Any, Tuple
from enum import Enum

import numpy as np
from pydantic import (
    AfterValidator,
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    ValidationError,
    field_serializer,
    field_validator,
    model_validator,
)
from typing_extensions import Annotated

from app.errors import GridError, ModelSpecError


# ===================================
# Custom Type for Numeric Arrays
# ===================================

def as_readonly_array(v: Any) -> np.ndarray:
    """Convert sequences to a 1-D float array that cannot be mutated in place"""
    arr = np.array(v, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


FloatArray = Annotated[np.ndarray, BeforeValidator(as_readonly_array)]


def _check_hurst(v: Optional[float]) -> Optional[float]:
    if v is not None and not (0.0 < v < 1.0):
        raise ValueError(f"Hurst index must lie in the open interval (0, 1), got {v}")
    return v


HurstIndex = Annotated[Optional[float], AfterValidator(_check_hurst)]


# ===================================
# Enums for Controlled Values
# ===================================

class ModelKind(str, Enum):
    """Noise process driving X_t = theta*t + B_t"""
    WIENER = "wiener"
    FBM = "fbm"
    FBM_PLUS_WIENER = "fbm+wiener"
    TWO_FBM = "fbm+fbm"


class Scheme(str, Enum):
    """Observation scheme of an estimate"""
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


class WeightMethod(str, Enum):
    """How a weight function h_T was obtained"""
    CLOSED_FORM = "closed_form"
    NEUMANN = "neumann"
    DIRECT = "direct"


# ===================================
# Covariance Model
# ===================================

class CovarianceModel(BaseModel):
    """
    Stationary-increment Gaussian noise specification.

    The single source of covariance truth: every autocovariance, kernel and
    simulator in the package is derived from one of these values.
    Textual form: ``wiener``, ``fbm:H``, ``fbm:H+wiener``, ``fbm:H1+fbm:H2``.
    """

    model_config = ConfigDict(frozen=True)

    kind: ModelKind = Field(description="Noise family")
    hurst1: HurstIndex = Field(default=None, description="Hurst index H (or H1)")
    hurst2: HurstIndex = Field(default=None, description="Second Hurst index H2 (TwoFbm only)")

    @model_validator(mode="before")
    @classmethod
    def normalize_brownian(cls, data: Any) -> Any:
        """fbm with H = 1/2 is Brownian motion"""
        if isinstance(data, dict):
            kind = data.get("kind")
            if kind in (ModelKind.FBM, ModelKind.FBM.value) and data.get("hurst1") == 0.5:
                data = {**data, "kind": ModelKind.WIENER, "hurst1": None}
        return data

    @model_validator(mode="after")
    def check_components(self) -> "CovarianceModel":
        needs_h1 = self.kind != ModelKind.WIENER
        needs_h2 = self.kind == ModelKind.TWO_FBM
        if needs_h1 and self.hurst1 is None:
            raise ValueError(f"model '{self.kind.value}' requires hurst1")
        if not needs_h1 and self.hurst1 is not None:
            raise ValueError("wiener model takes no Hurst index")
        if needs_h2 and self.hurst2 is None:
            raise ValueError("model 'fbm+fbm' requires hurst2")
        if not needs_h2 and self.hurst2 is not None:
            raise ValueError(f"model '{self.kind.value}' takes no hurst2")
        return self

    # --- constructors ---

    @classmethod
    def wiener(cls) -> "CovarianceModel":
        return cls(kind=ModelKind.WIENER)

    @classmethod
    def fbm(cls, hurst: float) -> "CovarianceModel":
        return cls(kind=ModelKind.FBM, hurst1=hurst)

    @classmethod
    def fbm_plus_wiener(cls, hurst: float) -> "CovarianceModel":
        return cls(kind=ModelKind.FBM_PLUS_WIENER, hurst1=hurst)

    @classmethod
    def two_fbm(cls, hurst1: float, hurst2: float) -> "CovarianceModel":
        return cls(kind=ModelKind.TWO_FBM, hurst1=hurst1, hurst2=hurst2)

    @classmethod
    def parse(cls, text: str) -> "CovarianceModel":
        """
        Parse the model grammar used by the CLI and config files

        Args:
            text: e.g. ``fbm:0.7+wiener``

        Returns:
            CovarianceModel

        Raises:
            ModelSpecError: unknown term, bad number or invalid Hurst index
        """
        terms = [t.strip().lower() for t in text.split("+") if t.strip()]
        if not terms:
            raise ModelSpecError(f"Empty model specification: '{text}'")

        hursts: List[float] = []
        n_wiener = 0
        for term in terms:
            if term == "wiener":
                n_wiener += 1
            elif term.startswith("fbm:"):
                try:
                    hursts.append(float(term[4:]))
                except ValueError:
                    raise ModelSpecError(f"Bad Hurst index in '{term}' (model '{text}')") from None
            else:
                raise ModelSpecError(
                    f"Unknown model term '{term}'; expected 'wiener' or 'fbm:H' (model '{text}')"
                )

        try:
            if n_wiener == 1 and not hursts:
                return cls.wiener()
            if n_wiener == 0 and len(hursts) == 1:
                return cls.fbm(hursts[0])
            if n_wiener == 1 and len(hursts) == 1:
                return cls.fbm_plus_wiener(hursts[0])
            if n_wiener == 0 and len(hursts) == 2:
                return cls.two_fbm(hursts[0], hursts[1])
        except ValidationError as e:
            messages = "; ".join(err["msg"] for err in e.errors())
            raise ModelSpecError(f"Invalid model '{text}': {messages}") from None

        raise ModelSpecError(
            f"Unsupported combination '{text}'; use wiener, fbm:H, fbm:H+wiener or fbm:H1+fbm:H2"
        )

    def __str__(self) -> str:
        if self.kind == ModelKind.WIENER:
            return "wiener"
        if self.kind == ModelKind.FBM:
            return f"fbm:{self.hurst1!r}"
        if self.kind == ModelKind.FBM_PLUS_WIENER:
            return f"fbm:{self.hurst1!r}+wiener"
        return f"fbm:{self.hurst1!r}+fbm:{self.hurst2!r}"

    # --- structure ---

    @property
    def components(self) -> Tuple[float, ...]:
        """Hurst indices of the independent components (Wiener counts as H = 1/2)"""
        if self.kind == ModelKind.WIENER:
            return (0.5,)
        if self.kind == ModelKind.FBM:
            return (self.hurst1,)
        if self.kind == ModelKind.FBM_PLUS_WIENER:
            return (self.hurst1, 0.5)
        return (self.hurst1, self.hurst2)

    @property
    def fbm_hursts(self) -> Tuple[float, ...]:
        """Hurst indices of the non-white (fBm) components"""
        if self.kind == ModelKind.WIENER:
            return ()
        if self.kind == ModelKind.TWO_FBM:
            return (self.hurst1, self.hurst2)
        return (self.hurst1,)

    @property
    def has_white_component(self) -> bool:
        return self.kind in (ModelKind.WIENER, ModelKind.FBM_PLUS_WIENER)

    @property
    def is_continuous_admissible(self) -> bool:
        """Kernel K is integrable and nonnegative only when every fBm part has H > 1/2"""
        return all(h > 0.5 for h in self.fbm_hursts)

    def require_continuous_admissible(self) -> None:
        if not self.is_continuous_admissible:
            raise ModelSpecError(
                f"Model '{self}' is not admissible for continuous-time operations: "
                "every fBm component needs H > 1/2"
            )


# ===================================
# Covariance Data
# ===================================

class IncrementAutocov(BaseModel):
    """gamma(k) = E(B_{(k+1)h} - B_{kh}) B_h for k = 0..n-1"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    step_h: float = Field(gt=0, description="Grid spacing")
    gamma: FloatArray = Field(description="Autocovariances at lags 0..n-1")


class SymToeplitz(BaseModel):
    """Symmetric Toeplitz matrix stored as its first row"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    first_row: FloatArray = Field(description="first_row[|i-j|] = T[i, j]")

    @field_validator("first_row")
    @classmethod
    def non_empty(cls, v: np.ndarray) -> np.ndarray:
        if v.size == 0:
            raise ValueError("Toeplitz first row must not be empty")
        return v

    @property
    def n(self) -> int:
        return int(self.first_row.size)

    def to_dense(self) -> np.ndarray:
        from scipy.linalg import toeplitz
        return toeplitz(self.first_row)


# ===================================
# Observations
# ===================================

class SamplePath(BaseModel):
    """Observed values X_{t_k} on a grid 0 = t_0 < t_1 < ... < t_N"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: FloatArray = Field(description="Strictly increasing grid starting at 0")
    values: FloatArray = Field(description="Process values, values[0] = 0")

    @model_validator(mode="after")
    def check_grid(self) -> "SamplePath":
        if self.times.size != self.values.size:
            raise ValueError(f"times ({self.times.size}) and values ({self.values.size}) differ in length")
        if self.times.size < 2:
            raise ValueError("a sample path needs at least two grid points")
        if self.times[0] != 0.0:
            raise ValueError(f"grid must start at t_0 = 0, got {self.times[0]}")
        if self.values[0] != 0.0:
            raise ValueError(f"path must start at X_0 = 0, got {self.values[0]}")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("grid times must be strictly increasing")
        return self

    @classmethod
    def from_increments(cls, times: np.ndarray, increments: np.ndarray) -> "SamplePath":
        return cls(times=times, values=np.concatenate(([0.0], np.cumsum(increments))))

    @property
    def n_increments(self) -> int:
        return int(self.times.size - 1)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def is_regular(self, rtol: float) -> bool:
        """Max deviation of steps from the mean step within rtol (relative)"""
        steps = self.steps
        mean_step = steps.mean()
        return bool(np.max(np.abs(steps - mean_step)) <= rtol * mean_step)

    def truncate(self, n_increments: int) -> "SamplePath":
        """Path restricted to its first n_increments steps"""
        if not 1 <= n_increments <= self.n_increments:
            raise GridError(f"cannot keep {n_increments} of {self.n_increments} increments")
        return SamplePath(
            times=self.times[: n_increments + 1],
            values=self.values[: n_increments + 1],
        )


# ===================================
# Continuous-time Weight Function
# ===================================

class WeightFunction(BaseModel):
    """Discretized h_T solving Gamma_T h_T = 1 on midpoints of a uniform partition"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: CovarianceModel
    horizon: float = Field(gt=0, description="Observation horizon T")
    nodes: FloatArray = Field(description="Cell midpoints in (0, T)")
    values: FloatArray = Field(description="h_T at the nodes")
    cell_width: float = Field(gt=0, description="T / n")
    integral_h: float = Field(gt=0, description="Integral of h_T over [0, T], the inverse variance")
    midpoint_integral: float = Field(description="Midpoint-rule sum of values, kept for diagnostics")
    cell_averages: Optional[FloatArray] = Field(
        default=None,
        description="Exact cell means of h_T when known in closed form",
    )
    residual: float = Field(ge=0, description="max |Gamma_T h - 1| over checked nodes")
    tol: float = Field(gt=0, description="Solver tolerance the residual was checked against")
    method: WeightMethod
    iterations: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_shapes(self) -> "WeightFunction":
        if self.nodes.size < 2:
            raise ValueError("a weight function needs at least two cells")
        if self.values.size != self.nodes.size:
            raise ValueError("nodes and values differ in length")
        if self.cell_averages is not None and self.cell_averages.size != self.nodes.size:
            raise ValueError("nodes and cell_averages differ in length")
        return self

    @property
    def n(self) -> int:
        return int(self.nodes.size)

    @property
    def coefficients(self) -> np.ndarray:
        """Piecewise-constant representation the Nyström operator acts on"""
        return self.cell_averages if self.cell_averages is not None else self.values

    @property
    def theoretical_variance(self) -> float:
        return 1.0 / self.integral_h


# ===================================
# Estimation Output
# ===================================

class EstimateReport(BaseModel):
    """Point estimate with its theoretical variance and grid metadata"""

    model_config = ConfigDict(frozen=True)

    theta_hat: float = Field(description="Maximum likelihood estimate of the drift")
    theoretical_variance: float = Field(gt=0, description="Exact variance of the estimator")
    scheme: Scheme
    model: CovarianceModel
    n_increments: int = Field(ge=1, description="Number of observed increments N")
    horizon: float = Field(gt=0, description="Observation horizon T")
    step: Optional[float] = Field(default=None, description="Grid step h on regular grids")
    n_cells: Optional[int] = Field(default=None, description="Weight-function cells (continuous)")
    regular_grid: bool = True

    @field_serializer("model")
    def serialize_model(self, model: CovarianceModel) -> str:
        return str(model)


# ===================================
# Simulation
# ===================================

class SimConfig(BaseModel):
    """Parameters of one simulated path of X_t = theta*t + B_t"""

    model_config = ConfigDict(frozen=True)

    model: CovarianceModel
    theta: float = Field(description="Drift")
    horizon: float = Field(gt=0, description="End time T")
    n_steps: int = Field(ge=1, description="Number of grid steps")
    seed: int = Field(ge=0, lt=2**64, description="64-bit base seed")

    @property
    def step(self) -> float:
        return self.horizon / self.n_steps


# ===================================
# Experiment Rows
# ===================================

class ExperimentRow(BaseModel):
    """Monte Carlo summary of one (H, T) cell of the drift-estimation table"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    hurst: float = Field(alias="H")
    horizon: float = Field(alias="T", gt=0)
    scheme: Scheme
    n_replications: int = Field(alias="n_reps", ge=1)
    sample_mean: float
    sample_variance: float
    theoretical_variance: float = Field(gt=0)


class ConsistencyRow(BaseModel):
    """Monte Carlo mean-square error of the discrete MLE for one sample size N"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    n_increments: int = Field(alias="N", ge=1)
    step: float = Field(alias="h", gt=0)
    n_replications: int = Field(alias="n_reps", ge=1)
    sample_mean: float
    sample_mse: float
    theoretical_variance: float = Field(gt=0)
