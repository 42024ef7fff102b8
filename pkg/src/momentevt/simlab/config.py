"""Experiment configuration schema.

A config is a single JSON document; unknown keys are rejected. Rules over the
sample size are power laws ``c * n**a``; the tail count uses ``floor``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError, MomentEvtError
from ..linalg import SpdMatrix, determinant
from ..models import TailModel, make_model
from ..regions import EllipticalModel

EXPERIMENTS = (
    "uni-consistency",
    "error-propagation",
    "ratio-bound",
    "elliptical-consistency",
)

ExperimentName = Literal[
    "uni-consistency", "error-propagation", "ratio-bound", "elliptical-consistency"
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PowerRule(_Strict):
    """``c * n**a``."""

    c: float = 1.0
    a: float

    def __call__(self, n: int) -> float:
        return self.c * float(n) ** self.a


class ModelSpec(_Strict):
    name: Literal["pareto", "frechet", "exponential", "bounded"]
    params: dict[str, float] = Field(default_factory=dict)

    def build(self) -> TailModel:
        return make_model(self.name, **self.params)


class Tolerances(_Strict):
    """Verdict thresholds. Engineering choices for desk-scale runs."""

    index_bias: float = Field(0.12, gt=0)
    quantile_rel_error: float | None = Field(None, gt=0)
    bounded_factor: float = Field(2.0, gt=0)
    fresh_residual_factor: float = Field(1.5, gt=0)
    sym_diff_ratio: float = Field(0.5, gt=0)


class ExperimentConfig(_Strict):
    experiment: ExperimentName
    model: ModelSpec
    n_grid: list[int] = Field(min_length=1)
    k_rule: PowerRule
    p_rule: PowerRule | None = None
    h_rule: PowerRule | None = None
    dimension: int | None = Field(None, ge=1)
    location: list[float] | None = None
    scatter: list[list[float]] | None = None
    replications: int = Field(ge=0)
    master_seed: int = Field(ge=0, lt=2**64)
    mc_draws: int | None = Field(None, ge=1000)
    perturbation: Literal["uniform", "alternating"] = "uniform"
    estimator: Literal["sample", "oracle"] = "sample"
    delta: float | None = Field(None, gt=0)
    data_scale: float = Field(1.0, gt=0)
    threads: int = Field(1, ge=1)
    tolerances: Tolerances = Field(default_factory=Tolerances)

    def k_of(self, n: int) -> int:
        return int(math.floor(self.k_rule(n)))

    def p_of(self, n: int) -> float:
        assert self.p_rule is not None
        return self.p_rule(n)

    def h_of(self, n: int) -> float:
        assert self.h_rule is not None
        return self.h_rule(n)

    def tail_model(self) -> TailModel:
        return self.model.build()

    def elliptical_model(self) -> EllipticalModel:
        d = self.dimension or 1
        mu = np.zeros(d) if self.location is None else np.asarray(self.location, dtype=float)
        sigma = np.eye(d) if self.scatter is None else np.asarray(self.scatter, dtype=float)
        return EllipticalModel(mu, SpdMatrix(sigma), self.tail_model())

    @model_validator(mode="after")
    def _check(self) -> ExperimentConfig:
        grid = self.n_grid
        if any(n < 2 for n in grid):
            raise ValueError("n_grid entries must be >= 2")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        try:
            model = self.tail_model()
        except MomentEvtError as exc:
            raise ValueError(str(exc)) from None

        for n in grid:
            k = self.k_of(n)
            if not 1 <= k <= n - 1:
                raise ValueError(f"k_rule gives k={k} at n={n}; need 1 <= k <= n-1")
            if self.p_rule is not None:
                p = self.p_of(n)
                if not 0 < p < k / n:
                    raise ValueError(f"p_rule gives p={p} at n={n}; need 0 < p < k/n = {k / n}")
            if self.h_rule is not None:
                h = self.h_of(n)
                if not 0 <= h < 1:
                    raise ValueError(f"h_rule gives h={h} at n={n}; need 0 <= h < 1")

        exp = self.experiment
        if exp in ("uni-consistency", "error-propagation", "elliptical-consistency"):
            if self.p_rule is None:
                raise ValueError(f"{exp} requires p_rule")
        if exp == "error-propagation" and self.h_rule is None:
            raise ValueError("error-propagation requires h_rule")
        if exp in ("ratio-bound", "elliptical-consistency"):
            if self.dimension is None:
                raise ValueError(f"{exp} requires dimension")
            if self.location is not None and len(self.location) != self.dimension:
                raise ValueError("location length must equal dimension")
            if self.scatter is not None:
                s = np.asarray(self.scatter, dtype=float)
                if s.shape != (self.dimension, self.dimension):
                    raise ValueError("scatter must be a dimension x dimension matrix")
                try:
                    det = determinant(SpdMatrix(s))
                except MomentEvtError as exc:
                    raise ValueError(f"scatter: {exc}") from None
                if abs(det - 1.0) > 1e-8:
                    raise ValueError(f"scatter must have unit determinant, got {det}")
        if exp == "elliptical-consistency":
            if self.mc_draws is None:
                raise ValueError("elliptical-consistency requires mc_draws")
            if self.p_rule.a != -1.0:
                raise ValueError("elliptical-consistency requires p_rule of the form c/n (a = -1)")
            if not model.gamma > -0.5:
                raise ValueError("elliptical-consistency requires a generator with gamma > -1/2")
            for n in grid:
                if self.p_of(n) > model.region_p_max:
                    raise ValueError(
                        f"p={self.p_of(n)} at n={n} exceeds the region threshold "
                        f"{model.region_p_max:.4g} of {model!r}"
                    )
        return self

    def echo(self) -> dict:
        """Config as written to summary.json; the worker count is an execution detail."""
        return self.model_dump(mode="json", exclude={"threads"})


def parse_config(doc: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Read a JSON config; non-None keyword overrides replace top-level keys."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return parse_config(doc)
