"""Game files, experiment configuration and result documents."""

from __future__ import annotations

import csv
import json
import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .calibration import ADVERSARIES, FORECASTERS
from .games import GAME_KINDS, BimatrixGame, generate_game

MODES = ("calibrate", "reduce", "verify")
SUITES = ("lemmas", "cover", "inequalities", "rates", "all")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


# ---------------------------------------------------------------- game files


def game_to_dict(game: BimatrixGame) -> dict:
    return {"d": game.d, "U1": game.U1.tolist(), "U2": game.U2.tolist()}


def game_from_dict(doc, name: str = "game") -> BimatrixGame:
    if not isinstance(doc, dict):
        raise ValueError("game document must be a JSON object")
    missing = [k for k in ("d", "U1", "U2") if k not in doc]
    if missing:
        raise ValueError(f"game document lacks {', '.join(missing)}")
    extra = sorted(set(doc) - {"d", "U1", "U2"})
    if extra:
        raise ValueError(f"game document has unknown keys {extra}")
    d = doc["d"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 2:
        raise ValueError(f"d must be an integer >= 2, got {d!r}")
    mats = []
    for key in ("U1", "U2"):
        rows = doc[key]
        if not isinstance(rows, list) or len(rows) != d:
            raise ValueError(f"{key} must have {d} rows, got {len(rows) if isinstance(rows, list) else type(rows).__name__}")
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != d:
                got = len(row) if isinstance(row, list) else type(row).__name__
                raise ValueError(f"{key} row {i} must have {d} entries, got {got}")
            for j, v in enumerate(row):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ValueError(f"{key}[{i}][{j}] = {v!r} is not a number")
                if not (0.0 <= v <= 1.0):
                    raise ValueError(f"{key}[{i}][{j}] = {v!r} is outside [0, 1]")
        mats.append(rows)
    return BimatrixGame(np.array(mats[0], dtype=float), np.array(mats[1], dtype=float), name=name)


def load_game(path) -> BimatrixGame:
    path = Path(path)
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: malformed JSON ({e})") from e
    return game_from_dict(doc, name=path.stem)


def dump_game(game: BimatrixGame) -> str:
    # repr-exact floats; one matrix row per line
    def mat(M):
        return "[\n" + ",\n".join("    " + json.dumps(row) for row in M.tolist()) + "\n  ]"

    return f'{{\n  "d": {game.d},\n  "U1": {mat(game.U1)},\n  "U2": {mat(game.U2)}\n}}\n'


def save_game(game: BimatrixGame, path) -> None:
    Path(path).write_text(dump_game(game))


def resolve_game(spec: str, d: int = 2, seed: int = 0) -> BimatrixGame:
    """A game from a file path or a generator name (``kind`` or ``kind:d``)."""
    kind, _, dim = spec.partition(":")
    if kind in GAME_KINDS:
        return generate_game(kind, int(dim) if dim else d, seed)
    if os.path.exists(spec):
        return load_game(spec)
    raise ValueError(f"{spec!r} is neither a game file nor one of {', '.join(GAME_KINDS)}")


# ------------------------------------------------------------ configuration


def parse_seeds(value) -> list[int]:
    """Seed list from ints, lists, or strings like ``"1..20"`` or ``"1,4,9"``."""
    if isinstance(value, bool):
        raise ValueError(f"invalid seed list {value!r}")
    if isinstance(value, int):
        seeds = [value]
    elif isinstance(value, (list, tuple)):
        seeds = []
        for v in value:
            seeds += parse_seeds(v)
    elif isinstance(value, str):
        seeds = []
        for part in value.split(","):
            part = part.strip()
            m = re.fullmatch(r"(\d+)\s*\.\.\s*(\d+)", part)
            if m:
                lo, hi = int(m.group(1)), int(m.group(2))
                if hi < lo:
                    raise ValueError(f"empty seed range {part!r}")
                seeds += list(range(lo, hi + 1))
            elif re.fullmatch(r"\d+", part):
                seeds.append(int(part))
            else:
                raise ValueError(f"invalid seed {part!r}")
    else:
        raise ValueError(f"invalid seed list {value!r}")
    if any(s < 0 for s in seeds):
        raise ValueError("seeds must be non-negative")
    return seeds


def parse_dims(value) -> list[int]:
    if isinstance(value, int) and not isinstance(value, bool):
        return [value]
    if isinstance(value, str):
        return [int(v) for v in value.split(",") if v.strip()]
    return [int(v) for v in value]


@dataclass
class ExperimentConfig:
    mode: str
    game: str = "matching_pennies"
    d: list | None = None  # calibrate and reduce default to [2]; verify to each check's own
    epsilon: float = 0.1
    delta: float | None = None
    rounds: int = 2000
    forecaster: str = "fixedpoint"
    forecaster_params: dict = field(default_factory=dict)
    adversary: str = "iid"
    mc_samples: int = 10_000
    mc_samples_final: int = 1_000_000
    seeds: list = field(default_factory=lambda: [1])
    out: str = "results"
    suite: str = "all"
    trials: int | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        if not isinstance(doc, dict):
            raise ConfigError("config", "must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in doc:
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
        if "mode" not in doc:
            raise ConfigError("mode", "missing")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    def validate(self) -> ExperimentConfig:
        def need(ok, name, msg):
            if not ok:
                raise ConfigError(name, msg)

        need(self.mode in MODES, "mode", f"must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.d is not None:
            try:
                self.d = parse_dims(self.d)
            except (TypeError, ValueError):
                raise ConfigError("d", f"invalid dimension list {self.d!r}") from None
            need(len(self.d) > 0 and all(v >= 2 for v in self.d), "d", "dimensions must be integers >= 2")
        need(isinstance(self.epsilon, (int, float)) and 0 < self.epsilon < 1, "epsilon", f"must lie in (0, 1), got {self.epsilon!r}")
        if self.delta is not None:
            need(isinstance(self.delta, (int, float)) and 0 < self.delta < 1, "delta", f"must lie in (0, 1), got {self.delta!r}")
        need(_is_count(self.rounds), "rounds", f"must be a positive integer, got {self.rounds!r}")
        need(self.forecaster in FORECASTERS, "forecaster", f"must be one of {', '.join(FORECASTERS)}, got {self.forecaster!r}")
        need(isinstance(self.forecaster_params, dict), "forecaster_params", "must be an object")
        need(self.adversary in ADVERSARIES, "adversary", f"must be one of {', '.join(ADVERSARIES)}, got {self.adversary!r}")
        need(_is_count(self.mc_samples), "mc_samples", f"must be a positive integer, got {self.mc_samples!r}")
        need(_is_count(self.mc_samples_final), "mc_samples_final", f"must be a positive integer, got {self.mc_samples_final!r}")
        try:
            self.seeds = parse_seeds(self.seeds)
        except ValueError as e:
            raise ConfigError("seeds", str(e)) from None
        need(len(self.seeds) > 0, "seeds", "seed list must not be empty")
        need(isinstance(self.out, str) and self.out != "", "out", "must be a directory path")
        need(self.suite in SUITES, "suite", f"must be one of {', '.join(SUITES)}, got {self.suite!r}")
        if self.trials is not None:
            need(_is_count(self.trials), "trials", f"must be a positive integer, got {self.trials!r}")
        if self.mode == "reduce":
            need(self.d is None or len(self.d) == 1, "d", "reduce takes a single dimension")
            kind = self.game.partition(":")[0]
            need(kind in GAME_KINDS or os.path.exists(self.game), "game", f"{self.game!r} is neither a game file nor one of {', '.join(GAME_KINDS)}")
        return self

    @property
    def dims(self) -> list[int]:
        return [2] if self.d is None else self.d


def _is_count(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v >= 1


def load_config(path) -> dict:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError("config", f"malformed JSON in {path} ({e})") from None
    return doc


# ---------------------------------------------------------------- outputs

REDUCTION_CSV_HEADER = ["t", "residual", "weak_rate_running", "outcome_i", "outcome_j"]
REDUCTION_SUMMARY_HEADER = [
    "seed", "weak_rate", "residual", "gamma", "gap_bound", "proof_bound", "theorem_bound",
    "residual_bound", "gap_ok", "proof_ok", "theorem_ok", "final_round", "digest",
]
CALIBRATION_SUMMARY_HEADER = ["dim", "adversary", "seed", "rounds", "rate_early", "rate_final", "decayed", "monotone_fraction", "converged_fraction"]


def calibration_csv_header(dim: int) -> list[str]:
    return ["t"] + [f"forecast_{i}" for i in range(dim)] + ["outcome", "residual", "weak_rate"]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


_NUM = {"type": "number"}
_NNUM = {"type": "number", "minimum": 0}
_BOOL = {"type": "boolean"}
_VEC = {"type": "array", "items": _NNUM, "minItems": 2}

CERTIFICATE_SCHEMA = {
    "type": "object",
    "required": [
        "weak_rate", "residual", "gamma", "tau_mc", "gap_bound", "proof_bound", "theorem_bound",
        "residual_bound", "d_gt_2", "epsilon_lt_inv_d3", "hypotheses_hold", "gap_ok", "proof_ok", "theorem_ok",
    ],
    "properties": {
        "weak_rate": {"type": "number", "minimum": 0, "maximum": 2},
        "residual": _NNUM,
        "gamma": {"type": "number", "minimum": 0, "maximum": 1},
        "tau_mc": _NNUM,
        "gap_bound": _NNUM,
        "proof_bound": _NNUM,
        "theorem_bound": _NNUM,
        "residual_bound": _NNUM,
        "d_gt_2": _BOOL,
        "epsilon_lt_inv_d3": _BOOL,
        "hypotheses_hold": _BOOL,
        "gap_ok": _BOOL,
        "proof_ok": _BOOL,
        "theorem_ok": _BOOL,
    },
    "additionalProperties": False,
}

REDUCTION_RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "reduction result",
    "type": "object",
    "required": ["config", "output", "certificate", "hypotheses", "final_round", "final_vertex", "digest", "converged_fraction"],
    "properties": {
        "config": {
            "type": "object",
            "required": ["game", "epsilon", "delta", "rounds", "forecaster", "mc_samples", "mc_samples_final", "seed"],
        },
        "output": {
            "type": "object",
            "required": ["row", "column"],
            "properties": {"row": _VEC, "column": _VEC},
            "additionalProperties": False,
        },
        "certificate": CERTIFICATE_SCHEMA,
        "hypotheses": {
            "type": "object",
            "required": ["d_gt_2", "epsilon_lt_inv_d3"],
            "properties": {"d_gt_2": _BOOL, "epsilon_lt_inv_d3": _BOOL},
        },
        "final_round": {"type": "integer", "minimum": 1},
        "final_vertex": _VEC,
        "digest": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "converged_fraction": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "additionalProperties": False,
}

CALIBRATION_RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "calibration result",
    "type": "object",
    "required": ["dim", "epsilon", "resolution", "rounds", "forecaster", "adversary", "seed", "checkpoints", "rate_final", "decayed", "monotone_fraction"],
    "properties": {
        "dim": {"type": "integer", "minimum": 2},
        "epsilon": _NNUM,
        "resolution": {"type": "integer", "minimum": 1},
        "rounds": {"type": "integer", "minimum": 1},
        "forecaster": {"type": "string"},
        "adversary": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "checkpoints": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["t", "weak_rate"],
                "properties": {"t": {"type": "integer", "minimum": 1}, "weak_rate": {"type": "number", "minimum": 0, "maximum": 2}},
            },
        },
        "rate_final": {"type": "number", "minimum": 0, "maximum": 2},
        "decayed": _BOOL,
        "monotone_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "converged_fraction": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "additionalProperties": False,
}

VERIFY_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "verification report",
    "type": "object",
    "required": ["suite", "checks", "all_passed"],
    "properties": {
        "suite": {"type": "string"},
        "all_passed": _BOOL,
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "trials", "passed", "violations", "max_excess", "seconds"],
                "properties": {
                    "name": {"type": "string"},
                    "trials": {"type": "integer", "minimum": 0},
                    "passed": {"type": "integer", "minimum": 0},
                    "violations": {"type": "integer", "minimum": 0},
                    "max_excess": _NUM,
                    "seconds": _NNUM,
                    "params": {"type": "object"},
                },
            },
        },
    },
    "additionalProperties": False,
}

SCHEMAS = {
    "reduction": REDUCTION_RESULT_SCHEMA,
    "calibration": CALIBRATION_RESULT_SCHEMA,
    "verify": VERIFY_REPORT_SCHEMA,
}


def reduction_result(tr) -> dict:
    """Result document of one reduction run."""
    from .reduction import transcript_digest

    cert = tr.certificate.as_dict()
    return {
        "config": tr.config.echo(),
        "output": {"row": tr.output[0].tolist(), "column": tr.output[1].tolist()},
        "certificate": cert,
        "hypotheses": {"d_gt_2": cert["d_gt_2"], "epsilon_lt_inv_d3": cert["epsilon_lt_inv_d3"]},
        "final_round": tr.final_round,
        "final_vertex": tr.final_vertex.tolist(),
        "digest": transcript_digest(tr),
        "converged_fraction": float(tr.converged.mean()),
    }


def reduction_rows(tr):
    for k in range(tr.rounds):
        yield (k + 1, float(tr.residuals[k]), float(tr.weak_rates[k]), int(tr.outcomes[k, 0]), int(tr.outcomes[k, 1]))


def checkpoints(rounds: int, first: int = 250) -> list[int]:
    """Doubling schedule ``first, 2 first, ...`` capped by and ending at ``rounds``."""
    pts = []
    t = min(first, rounds)
    while t < rounds:
        pts.append(t)
        t *= 2
    pts.append(rounds)
    return pts
