import json
import logging
import os
from datetime import datetime
from typing import Dict, Any, List, Optional, Tuple, Literal

from pydantic import BaseModel, Field, PositiveFloat, ValidationError, field_validator, model_validator

from config import GRID_SETTINGS, SCAN_SETTINGS, OUTPUT_SETTINGS
from measures import ShiftlabError, Verdict, NonIntegrable
from measures.measure_1d import Measure1D
from measures.measure_2d import Measure2D
from shifts import BaseShift
from shifts.shift_1d import weight_seq_from_dict
from shifts.shift_2d import ShiftGrid
from shifts.tc_class import FiveTuple, build_grid


class InputError(ShiftlabError):
    """Malformed or invalid JSON input"""


def setup_logging(log_dir: str = None, verbose: bool = False, prefix: str = "shiftlab") -> str:
    """Set up logging configuration"""
    log_dir = log_dir or OUTPUT_SETTINGS["log_dir"]
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = os.path.join(log_dir, f"{prefix}_{timestamp}.log")

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler()  # Also print to console
        ]
    )

    return log_file


class DensityPieceModel(BaseModel):
    lo: float = Field(ge=0.0)
    hi: float
    terms: List[Tuple[float, float]]

    @model_validator(mode="after")
    def check_interval(self):
        if not self.lo < self.hi:
            raise ValueError(f"density interval [{self.lo}, {self.hi}] is empty")
        return self


class Measure1DModel(BaseModel):
    atoms: List[Tuple[float, float]] = Field(default_factory=list)
    pieces: List[DensityPieceModel] = Field(default_factory=list)

    @field_validator("atoms")
    @classmethod
    def check_locations(cls, atoms):
        for loc, _ in atoms:
            if loc < 0.0:
                raise ValueError(f"atom location {loc} is negative")
        return atoms


class ProductTermModel(BaseModel):
    weight: float = 1.0
    s: Measure1DModel
    t: Measure1DModel


class Measure2DModel(BaseModel):
    terms: List[ProductTermModel]


class BackExtModel(BaseModel):
    a: PositiveFloat
    inner: "WeightSeqModel"


class WeightSeqModel(BaseModel):
    weights: Optional[List[PositiveFloat]] = None
    tail: Optional[Literal["constant"]] = "constant"
    measure: Optional[Measure1DModel] = None
    backext: Optional[BackExtModel] = None

    @model_validator(mode="after")
    def check_source(self):
        sources = [name for name in ("weights", "measure", "backext") if getattr(self, name) is not None]
        if len(sources) != 1:
            raise ValueError(f"exactly one of weights/measure/backext is required, got {sources}")
        return self


BackExtModel.model_rebuild()


class FiveTupleModel(BaseModel):
    sigma: Measure1DModel
    tau: Measure1DModel
    a: PositiveFloat
    xi: Measure1DModel
    eta: Measure1DModel


class GridModel(BaseModel):
    tc: Optional[FiveTupleModel] = None
    alphaRows: Optional[List[List[PositiveFloat]]] = None
    betaRows: Optional[List[List[PositiveFloat]]] = None
    tail: Literal["tensor"] = "tensor"

    @model_validator(mode="after")
    def check_source(self):
        explicit = self.alphaRows is not None and self.betaRows is not None
        if (self.tc is not None) == explicit:
            raise ValueError("give either 'tc' or both 'alphaRows' and 'betaRows'")
        return self


class ScanConfig(BaseModel):
    """Parameters of the hyponormal-but-not-subnormal region scan"""
    kappa_steps: int = Field(default=SCAN_SETTINGS["kappa_steps"], ge=2)
    y0_steps: int = Field(default=SCAN_SETTINGS["y0_steps"], ge=2)
    omega: Tuple[float, float, float] = SCAN_SETTINGS["omega"]
    a: PositiveFloat = SCAN_SETTINGS["a"]
    window: Tuple[int, int] = GRID_SETTINGS["hyponormal_K"]
    powers: Tuple[int, int] = SCAN_SETTINGS["audit_powers"]
    audit: int = Field(default=0, ge=0)
    out: Optional[str] = None

    @field_validator("omega")
    @classmethod
    def check_omega(cls, omega):
        if not 0.0 < omega[0] < omega[1] < omega[2]:
            raise ValueError(f"omega must satisfy 0 < w0 < w1 < w2, got {omega}")
        return omega

    @field_validator("out")
    @classmethod
    def check_out(cls, out):
        if out is not None and os.path.splitext(out)[1].lower() not in (".csv", ".svg"):
            raise ValueError(f"output must end in .csv or .svg, got {out}")
        return out

    @property
    def output_format(self) -> str:
        if self.out is None:
            return "csv"
        return os.path.splitext(self.out)[1].lower().lstrip(".")


def load_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read JSON from {path}: {e}") from e


def _validated(model, data: Dict[str, Any]):
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise InputError(f"invalid {model.__name__}: {e}") from e


def parse_measure(data: Dict[str, Any]) -> Measure1D:
    try:
        return Measure1D.from_dict(_validated(Measure1DModel, data).model_dump())
    except (ValueError, NonIntegrable) as e:
        raise InputError(str(e)) from e


def parse_measure_2d(data: Dict[str, Any]) -> Measure2D:
    try:
        return Measure2D.from_dict(_validated(Measure2DModel, data).model_dump())
    except (ValueError, NonIntegrable) as e:
        raise InputError(str(e)) from e


def parse_weight_seq(data: Dict[str, Any]) -> BaseShift:
    model = _validated(WeightSeqModel, data)
    try:
        return weight_seq_from_dict(model.model_dump())
    except (ValueError, NonIntegrable) as e:
        raise InputError(str(e)) from e


def parse_five_tuple(data: Dict[str, Any]) -> FiveTuple:
    model = _validated(FiveTupleModel, data)
    try:
        return FiveTuple.from_dict(model.model_dump())
    except (ValueError, NonIntegrable) as e:
        raise InputError(str(e)) from e


def parse_grid(data: Dict[str, Any], window: Tuple[int, int] = None) -> ShiftGrid:
    """Grid from either a TC five-tuple or explicit weight tables"""
    model = _validated(GridModel, data)
    try:
        if model.tc is not None:
            return build_grid(FiveTuple.from_dict(model.tc.model_dump()), window)
        return ShiftGrid.from_rows(model.alphaRows, model.betaRows, model.tail, window)
    except (ValueError, NonIntegrable) as e:
        raise InputError(str(e)) from e


def format_measure(mu: Measure1D, digits: int = 12) -> str:
    """Human-readable measure: atoms first, then density pieces"""
    if mu.is_zero():
        return "0"
    parts = [f"{mass:.{digits}g}*delta({loc:.{digits}g})" for loc, mass in mu.atoms]
    for piece in mu.pieces:
        density = " + ".join(f"{t.coefficient:.{digits}g}*t^{t.exponent:.{digits}g}" for t in piece.terms)
        parts.append(f"[{density}] dt on [{piece.lo:.{digits}g}, {piece.hi:.{digits}g}]")
    return " + ".join(parts)


def format_verdict(label: str, verdict: Verdict) -> str:
    status = "PASS" if verdict.passed else "FAIL"
    line = f"{label}: {status} (margin {verdict.margin:.12g})"
    if not verdict.passed:
        line += f", witness {verdict.witness}"
    if verdict.reason:
        line += f" - {verdict.reason}"
    return line
