from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, NonNegativeFloat, PositiveFloat, TypeAdapter, model_validator

from qtransport.config import Config
from qtransport.encoders import (
    BinaryLayout,
    CvrpInstance,
    Customer,
    OneHotLayout,
    TrafficGrid,
    TspInstance,
)
from qtransport.qubo import IsingModel, PseudoBooleanPolynomial, QuboModel, ising_to_qubo


class QuboDocument(BaseModel):
    """QUBO model on disk; a ``terms`` list makes it a HOBO document."""

    num_vars: int = Field(..., ge=0, description="Number of binary variables")
    offset: FiniteFloat = 0.0
    linear: list[tuple[int, FiniteFloat]] = Field(default_factory=list)
    quadratic: list[tuple[int, int, FiniteFloat]] = Field(default_factory=list)
    terms: Optional[list[tuple[list[int], FiniteFloat]]] = None

    @model_validator(mode="after")
    def check_indices(self) -> "QuboDocument":
        n = self.num_vars
        bad = [i for i, _ in self.linear if not 0 <= i < n]
        bad += [k for i, j, _ in self.quadratic for k in (i, j) if not 0 <= k < n]
        bad += [k for key, _ in self.terms or [] for k in key if not 0 <= k < n]
        if bad:
            raise ValueError(f"variable indices out of range [0, {n}): {sorted(set(bad))}")
        return self

    @property
    def is_hobo(self) -> bool:
        return self.terms is not None

    def to_model(self) -> Union[QuboModel, PseudoBooleanPolynomial]:
        if self.is_hobo:
            items = [((), self.offset)] + [((i,), c) for i, c in self.linear]
            items += [((i, j), c) for i, j, c in self.quadratic] + [(tuple(key), c) for key, c in self.terms]
            return PseudoBooleanPolynomial.build(self.num_vars, items)
        return QuboModel.build(self.num_vars, self.linear, self.quadratic, self.offset)

    @classmethod
    def from_model(cls, model) -> "QuboDocument":
        if isinstance(model, IsingModel):
            model = ising_to_qubo(model)
        if isinstance(model, PseudoBooleanPolynomial):
            return cls(
                num_vars=model.num_vars,
                offset=model.constant_term,
                terms=[(list(key), c) for key, c in model.terms.items() if key],
            )
        return cls(
            num_vars=model.num_vars,
            offset=model.offset,
            linear=[(i, c) for i, c in model.linear.items()],
            quadratic=[(i, j, c) for (i, j), c in model.quadratic.items()],
        )

    def to_document(self) -> dict:
        return self.model_dump(exclude_none=True)


# ----------------------------------------------------------------------
# Problem documents
# ----------------------------------------------------------------------

class TspDocument(BaseModel):
    distance: list[list[NonNegativeFloat]] = Field(..., min_length=1, description="Square distance matrix")

    @model_validator(mode="after")
    def check_square(self) -> "TspDocument":
        n = len(self.distance)
        ragged = [r for r, row in enumerate(self.distance) if len(row) != n]
        if ragged:
            raise ValueError(f"distance must be {n}x{n}; rows {ragged} have the wrong length")
        return self

    def to_instance(self) -> TspInstance:
        return TspInstance(self.distance)


class TrafficDocument(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    rows: int = Field(..., ge=1)
    cols: int = Field(..., ge=1)
    q_ns: list[NonNegativeFloat]
    q_ew: list[NonNegativeFloat]
    prev: list[Literal[-1, 0, 1]] = Field(default_factory=list)
    bias_weight: NonNegativeFloat = Field(1.0, alias="A")
    switch_weight: NonNegativeFloat = Field(0.0, alias="B")
    green_wave_weight: NonNegativeFloat = Field(0.0, alias="G")

    def to_grid(self) -> TrafficGrid:
        return TrafficGrid(
            self.rows, self.cols, tuple(self.q_ns), tuple(self.q_ew), tuple(self.prev),
            self.bias_weight, self.switch_weight, self.green_wave_weight,
        )


class CvrpDocument(BaseModel):
    depot: tuple[FiniteFloat, FiniteFloat]
    customers: list[tuple[FiniteFloat, FiniteFloat, int]] = Field(..., min_length=1)
    capacity: int = Field(..., ge=1)
    vehicles: int = Field(..., ge=1)

    def to_instance(self) -> CvrpInstance:
        return CvrpInstance(
            depot=self.depot,
            customers=tuple(Customer(x, y, demand) for x, y, demand in self.customers),
            capacity=self.capacity,
            vehicles=self.vehicles,
        )


# ----------------------------------------------------------------------
# Layout sidecars
# ----------------------------------------------------------------------

class OneHotLayoutDocument(BaseModel):
    kind: Literal["tsp-one-hot"] = "tsp-one-hot"
    num_cities: int = Field(..., ge=2)
    fixed_start: bool = False
    distance: Optional[list[list[NonNegativeFloat]]] = None

    def to_layout(self) -> OneHotLayout:
        return OneHotLayout(self.num_cities, self.fixed_start)


class BinaryLayoutDocument(BaseModel):
    kind: Literal["tsp-binary"] = "tsp-binary"
    num_cities: int = Field(..., ge=2)
    distance: Optional[list[list[NonNegativeFloat]]] = None

    def to_layout(self) -> BinaryLayout:
        return BinaryLayout(self.num_cities)


class TrafficLayoutDocument(BaseModel):
    kind: Literal["traffic"] = "traffic"
    problem: TrafficDocument


class CvrpLayoutDocument(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    kind: Literal["cvrp"] = "cvrp"
    problem: CvrpDocument
    lam: Optional[PositiveFloat] = Field(None, alias="lambda")


LayoutDocument = Annotated[
    Union[OneHotLayoutDocument, BinaryLayoutDocument, TrafficLayoutDocument, CvrpLayoutDocument],
    Field(discriminator="kind"),
]
layout_adapter = TypeAdapter(LayoutDocument)


# ----------------------------------------------------------------------
# Solver and experiment configuration
# ----------------------------------------------------------------------

class SolverConfig(BaseModel):
    name: Literal["brute", "sa", "qaoa"] = "sa"
    sweeps: Optional[int] = Field(None, ge=1, description="Annealing sweeps")
    t0: Optional[PositiveFloat] = Field(None, description="Initial temperature")
    t1: Optional[PositiveFloat] = Field(None, description="Final temperature")
    p: int = Field(1, ge=1, description="QAOA depth")
    restarts: Optional[int] = Field(None, ge=1)
    max_iters: Optional[int] = Field(None, ge=1)
    method: Literal["Nelder-Mead", "COBYLA"] = "Nelder-Mead"
    shots: Optional[int] = Field(None, ge=1)
    exact: bool = True
    workers: int = Field(1, ge=1, description="Processes used for repeated runs")

    @model_validator(mode="after")
    def check_temperatures(self) -> "SolverConfig":
        if self.t0 is not None and self.t1 is not None and self.t0 < self.t1:
            raise ValueError(f"t0={self.t0} must not be below t1={self.t1}")
        return self


class ExperimentSpec(BaseModel):
    model: QuboDocument
    solver: SolverConfig = Field(default_factory=SolverConfig)
    runs: int = Field(..., ge=1)
    seed: int = Field(default_factory=lambda: Config.DEFAULT_SEED)
    output: Optional[str] = None
    instance: dict = Field(default_factory=dict, description="Free-form descriptor copied into the report")
    optimal_energy: Optional[float] = Field(None, description="Known optimum; brute force is used when omitted")


class TtsRequest(ExperimentSpec):
    layout: Optional[dict] = Field(None, description="TSP layout sidecar; its tour oracle supplies the optimum")


class EncodeRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    problem: dict
    encoding: Literal["one-hot", "one-hot-fixed", "binary", "traffic", "cvrp"]
    lam: Optional[PositiveFloat] = Field(None, alias="lambda")


class SolveRequest(BaseModel):
    model: QuboDocument
    layout: Optional[dict] = Field(None, description="Layout sidecar written by encode")
    solver: SolverConfig = Field(default_factory=SolverConfig)
    seed: int = Field(default_factory=lambda: Config.DEFAULT_SEED)
