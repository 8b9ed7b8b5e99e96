"""
File schemas for problems and reports.

Problem files are JSON documents with row-major nested arrays.
Two kinds are accepted, discriminated by the "kind" field:

- descriptor:   n, m, E, A, B
- higher_order: d, N, M, P (list P_d ... P_0), b

Both may carry an optional mask, a solver block and sweep parameters.
"""

from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

Matrix = list[list[float]]
BoolMatrix = list[list[bool]]


def _shape(rows: list[list]) -> tuple[int, int]:
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise ValueError(f"ragged rows with lengths {sorted(widths)}")
    return len(rows), (widths.pop() if widths else 0)


def _expect(name: str, rows: list[list], expected: tuple[int, int]) -> None:
    try:
        found = _shape(rows)
    except ValueError as e:
        raise ValueError(f"{name}: {e}") from None
    if found != expected:
        raise ValueError(f"{name}: expected shape {expected}, found {found}")


class SolverBlock(BaseModel):
    """Optional solver overrides stored in a problem file."""

    model_config = ConfigDict(extra="forbid")

    omega: float | None = Field(default=None, gt=0)
    epsilon: float | None = Field(default=None, gt=0)
    max_iter: int | None = Field(default=None, ge=1)
    partition_col: int | Literal["last"] | None = None
    multistart: bool | None = None
    multistart_columns: list[int] | None = None
    mode_search: bool | None = None


class EntryRef(BaseModel):
    """One matrix entry driven by a sweep parameter (value * scale)."""

    model_config = ConfigDict(extra="forbid")

    matrix: str
    row: int = Field(ge=0)
    col: int = Field(ge=0)
    scale: float = 1.0


class ParameterBinding(BaseModel):
    """Sweep parameter bound either to matrix entries or to precomputed variants."""

    model_config = ConfigDict(extra="forbid")

    entries: list[EntryRef] | None = None
    variants: dict[str, dict[str, Matrix]] | None = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.entries is None) == (self.variants is None):
            raise ValueError("parameter needs exactly one of 'entries' or 'variants'")
        return self


class DescriptorMask(BaseModel):
    model_config = ConfigDict(extra="forbid")

    E: BoolMatrix | None = None
    A: BoolMatrix | None = None
    B: BoolMatrix | None = None


class DescriptorProblem(BaseModel):
    """Descriptor triple E z' = A z + B u."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["descriptor"] = "descriptor"
    name: str | None = None
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    E: Matrix
    A: Matrix
    B: Matrix
    mask: DescriptorMask | None = None
    solver: SolverBlock | None = None
    parameters: dict[str, ParameterBinding] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_shapes(self):
        n, m = self.n, self.m
        _expect("E", self.E, (n, n))
        _expect("A", self.A, (n, n))
        _expect("B", self.B, (n, m))
        if self.mask is not None:
            for name, shape in (("E", (n, n)), ("A", (n, n)), ("B", (n, m))):
                value = getattr(self.mask, name)
                if value is not None:
                    _expect(f"mask.{name}", value, shape)
        return self

    def matrix_shapes(self) -> dict[str, tuple[int, int]]:
        return {"E": (self.n, self.n), "A": (self.n, self.n), "B": (self.n, self.m)}


class HigherOrderMask(BaseModel):
    model_config = ConfigDict(extra="forbid")

    P: list[BoolMatrix] | None = None
    b: BoolMatrix | None = None


class HigherOrderProblem(BaseModel):
    """Order-d system with coefficients listed leading first (P_d, ..., P_0)."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["higher_order"] = "higher_order"
    name: str | None = None
    d: int = Field(ge=1)
    N: int = Field(ge=1)
    M: int = Field(ge=1)
    P: list[Matrix]
    b: Matrix
    mask: HigherOrderMask | None = None
    solver: SolverBlock | None = None
    parameters: dict[str, ParameterBinding] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_shapes(self):
        d, N, M = self.d, self.N, self.M
        if len(self.P) != d + 1:
            raise ValueError(f"P: expected {d + 1} coefficient matrices, found {len(self.P)}")
        for i, P in enumerate(self.P):
            _expect(f"P{d - i}", P, (N, N))
        _expect("b", self.b, (N, M))
        if self.mask is not None:
            if self.mask.P is not None:
                if len(self.mask.P) != d + 1:
                    raise ValueError(f"mask.P: expected {d + 1} masks, found {len(self.mask.P)}")
                for i, mk in enumerate(self.mask.P):
                    _expect(f"mask.P{d - i}", mk, (N, N))
            if self.mask.b is not None:
                _expect("mask.b", self.mask.b, (N, M))
        return self

    def matrix_shapes(self) -> dict[str, tuple[int, int]]:
        shapes = {f"P{i}": (self.N, self.N) for i in range(self.d + 1)}
        shapes["b"] = (self.N, self.M)
        return shapes


ProblemFile = Annotated[Union[DescriptorProblem, HigherOrderProblem], Field(discriminator="kind")]
problem_adapter = TypeAdapter(ProblemFile)


class SolverEcho(BaseModel):
    """Solver settings actually used, echoed into the report."""

    omega: float
    epsilon: float
    max_iter: int
    partition_col: int | Literal["last"]
    multistart: bool
    multistart_columns: list[int] | None = None
    mode_search: bool = True


class Perturbations(BaseModel):
    dE: Matrix
    dA: Matrix
    dB: Matrix


class PerturbedHigherOrder(BaseModel):
    P: list[Matrix]
    b: Matrix


class ReportFile(BaseModel):
    """Result of a radius computation; field order is the serialization order."""

    name: str | None = None
    radius_frobenius: float
    radius_spectral: float
    converged: bool
    uncontrollability_verified: bool
    iterations: int
    partition_col_used: int
    verification_rel_tol: float
    perturbations: Perturbations
    perturbed_system: DescriptorProblem
    perturbed_higher_order: PerturbedHigherOrder | None = None
    solver: SolverEcho
