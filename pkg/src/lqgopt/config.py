"""Run-configuration documents: a strict JSON schema carrying the plant,
an optional controller, optimizer parameters, output paths, and an optional
list of benchmark systems for comparison runs.

Unknown keys anywhere in the document are rejected; matrices are rectangular
row-major arrays of numbers.  Parsing returns raw matrices; domain checks
(plant assumptions, controller admissibility) belong to the commands so a
malformed document and an invalid plant exit differently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bench import BenchmarkSystem, generate_random_plant
from .errors import ConfigError
from .geometry import MetricWeights
from .model import Controller, Plant
from .optimizer import OptimizerConfig

PLANT_KEYS = ("A", "B", "C", "W", "V", "Q", "R")
CONTROLLER_KEYS = ("A_K", "B_K", "C_K")
OPTIMIZER_KEYS = (
    "algorithm",
    "w1",
    "w2",
    "w3",
    "T",
    "gamma",
    "beta",
    "eps",
    "sbar",
    "halt_gap",
    "seed",
    "perturb_scale",
)
OUTPUT_KEYS = ("trace_path", "summary_path", "controller_path")
TOP_KEYS = ("plant", "controller", "optimizer", "output", "systems")
SYSTEM_KEYS = ("name", "plant", "random", "note", "j_star")
RANDOM_KEYS = ("n", "m", "p", "density", "seeds")


def _require_mapping(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object, got {type(obj).__name__}")
    return obj


def _reject_unknown(obj: dict, allowed, where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _parse_matrix(obj, where: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ConfigError(f"{where} must be a non-empty array of rows")
    rows = []
    width = None
    for i, row in enumerate(obj):
        if not isinstance(row, list) or not row:
            raise ConfigError(f"{where}[{i}] must be a non-empty array of numbers")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ConfigError(f"{where} is not rectangular: row {i} has {len(row)} entries")
        for j, value in enumerate(row):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{where}[{i}][{j}] is not a number")
            if not np.isfinite(value):
                raise ConfigError(f"{where}[{i}][{j}] is not finite")
        rows.append([float(v) for v in row])
    return np.array(rows, dtype=float)


def _parse_number(obj, where: str, integer: bool = False):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(f"{where} must be a number")
    if integer:
        if int(obj) != obj:
            raise ConfigError(f"{where} must be an integer")
        return int(obj)
    return float(obj)


@dataclass(frozen=True)
class RawPlant:
    """Validated-shape plant matrices, not yet checked against assumptions."""

    matrices: dict

    def build(self) -> Plant:
        return Plant(**self.matrices)


@dataclass(frozen=True)
class SystemSpec:
    """One entry of the comparison suite: an explicit plant or a random family."""

    name: str
    raw_plant: RawPlant | None = None
    random: dict | None = None
    note: str = ""
    j_star: float | None = None

    def expand(self) -> list[BenchmarkSystem]:
        if self.raw_plant is not None:
            return [
                BenchmarkSystem(
                    name=self.name,
                    plant=self.raw_plant.build(),
                    note=self.note,
                    j_star=self.j_star,
                )
            ]
        out = []
        spec = self.random
        for seed in spec["seeds"]:
            plant = generate_random_plant(
                spec["n"], spec["m"], spec["p"], spec["density"], np.random.default_rng(seed)
            )
            out.append(
                BenchmarkSystem(name=f"{self.name}-s{seed}", plant=plant, note=self.note)
            )
        return out


@dataclass(frozen=True)
class OutputPaths:
    trace_path: str | None = None
    summary_path: str | None = None
    controller_path: str | None = None


@dataclass(frozen=True)
class RunConfigDocument:
    raw_plant: RawPlant | None
    raw_controller: dict | None
    optimizer: OptimizerConfig
    output: OutputPaths
    systems: list[SystemSpec] = field(default_factory=list)

    def plant(self) -> Plant:
        if self.raw_plant is None:
            raise ConfigError("this command requires a 'plant' section")
        return self.raw_plant.build()

    def controller(self) -> Controller | None:
        if self.raw_controller is None:
            return None
        return Controller(**self.raw_controller)


def _parse_plant_section(obj, where: str) -> RawPlant:
    obj = _require_mapping(obj, where)
    _reject_unknown(obj, PLANT_KEYS, where)
    missing = [k for k in PLANT_KEYS if k not in obj]
    if missing:
        raise ConfigError(f"{where} is missing key(s): {', '.join(missing)}")
    return RawPlant({k: _parse_matrix(obj[k], f"{where}.{k}") for k in PLANT_KEYS})


def _parse_optimizer_section(obj) -> OptimizerConfig:
    obj = _require_mapping(obj, "optimizer")
    _reject_unknown(obj, OPTIMIZER_KEYS, "optimizer")
    kwargs = {}
    if "algorithm" in obj:
        if obj["algorithm"] not in ("rgd", "gd"):
            raise ConfigError("optimizer.algorithm must be 'rgd' or 'gd'")
        kwargs["algorithm"] = obj["algorithm"]
    weights = {}
    for key in ("w1", "w2", "w3"):
        if key in obj:
            weights[key] = _parse_number(obj[key], f"optimizer.{key}")
    if weights:
        try:
            kwargs["weights"] = MetricWeights(
                weights.get("w1", 1.0), weights.get("w2", 1.0), weights.get("w3", 1.0)
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if "T" in obj:
        kwargs["max_iters"] = _parse_number(obj["T"], "optimizer.T", integer=True)
    if "gamma" in obj:
        kwargs["armijo"] = _parse_number(obj["gamma"], "optimizer.gamma")
    if "beta" in obj:
        kwargs["backtrack"] = _parse_number(obj["beta"], "optimizer.beta")
    if "eps" in obj:
        kwargs["grad_tol"] = _parse_number(obj["eps"], "optimizer.eps")
    if "sbar" in obj:
        kwargs["init_step"] = _parse_number(obj["sbar"], "optimizer.sbar")
    if "halt_gap" in obj:
        kwargs["halt_gap"] = (
            None if obj["halt_gap"] is None else _parse_number(obj["halt_gap"], "optimizer.halt_gap")
        )
    if "seed" in obj:
        kwargs["seed"] = _parse_number(obj["seed"], "optimizer.seed", integer=True)
    if "perturb_scale" in obj:
        kwargs["perturb_scale"] = _parse_number(obj["perturb_scale"], "optimizer.perturb_scale")
    try:
        return OptimizerConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"optimizer parameters out of range: {exc}") from exc


def _parse_system_entry(obj, where: str) -> SystemSpec:
    obj = _require_mapping(obj, where)
    _reject_unknown(obj, SYSTEM_KEYS, where)
    if "name" not in obj or not isinstance(obj["name"], str) or not obj["name"]:
        raise ConfigError(f"{where} needs a non-empty string 'name'")
    has_plant = "plant" in obj
    has_random = "random" in obj
    if has_plant == has_random:
        raise ConfigError(f"{where} must carry exactly one of 'plant' or 'random'")
    note = obj.get("note", "")
    if not isinstance(note, str):
        raise ConfigError(f"{where}.note must be a string")
    j_star = None
    if "j_star" in obj and obj["j_star"] is not None:
        j_star = _parse_number(obj["j_star"], f"{where}.j_star")
    if has_plant:
        return SystemSpec(
            name=obj["name"],
            raw_plant=_parse_plant_section(obj["plant"], f"{where}.plant"),
            note=note,
            j_star=j_star,
        )
    rnd = _require_mapping(obj["random"], f"{where}.random")
    _reject_unknown(rnd, RANDOM_KEYS, f"{where}.random")
    missing = [k for k in RANDOM_KEYS if k not in rnd]
    if missing:
        raise ConfigError(f"{where}.random is missing key(s): {', '.join(missing)}")
    parsed = {
        "n": _parse_number(rnd["n"], f"{where}.random.n", integer=True),
        "m": _parse_number(rnd["m"], f"{where}.random.m", integer=True),
        "p": _parse_number(rnd["p"], f"{where}.random.p", integer=True),
        "density": _parse_number(rnd["density"], f"{where}.random.density"),
    }
    if not isinstance(rnd["seeds"], list) or not rnd["seeds"]:
        raise ConfigError(f"{where}.random.seeds must be a non-empty array of integers")
    parsed["seeds"] = [
        _parse_number(s, f"{where}.random.seeds[{i}]", integer=True)
        for i, s in enumerate(rnd["seeds"])
    ]
    return SystemSpec(name=obj["name"], random=parsed, note=note, j_star=j_star)


def parse_config(text: str) -> RunConfigDocument:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    doc = _require_mapping(doc, "document")
    _reject_unknown(doc, TOP_KEYS, "document")

    raw_plant = None
    if "plant" in doc:
        raw_plant = _parse_plant_section(doc["plant"], "plant")

    raw_controller = None
    if "controller" in doc:
        ctl = _require_mapping(doc["controller"], "controller")
        _reject_unknown(ctl, CONTROLLER_KEYS, "controller")
        missing = [k for k in CONTROLLER_KEYS if k not in ctl]
        if missing:
            raise ConfigError(f"controller is missing key(s): {', '.join(missing)}")
        raw_controller = {
            k: _parse_matrix(ctl[k], f"controller.{k}") for k in CONTROLLER_KEYS
        }

    optimizer = _parse_optimizer_section(doc.get("optimizer", {}))

    output = OutputPaths()
    if "output" in doc:
        out = _require_mapping(doc["output"], "output")
        _reject_unknown(out, OUTPUT_KEYS, "output")
        for key in OUTPUT_KEYS:
            if key in out and not isinstance(out[key], str):
                raise ConfigError(f"output.{key} must be a string path")
        output = OutputPaths(
            trace_path=out.get("trace_path"),
            summary_path=out.get("summary_path"),
            controller_path=out.get("controller_path"),
        )

    systems = []
    if "systems" in doc:
        if not isinstance(doc["systems"], list) or not doc["systems"]:
            raise ConfigError("systems must be a non-empty array")
        systems = [
            _parse_system_entry(entry, f"systems[{i}]")
            for i, entry in enumerate(doc["systems"])
        ]

    return RunConfigDocument(
        raw_plant=raw_plant,
        raw_controller=raw_controller,
        optimizer=optimizer,
        output=output,
        systems=systems,
    )


def load_config(path: str | Path) -> RunConfigDocument:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
