"""Iterative class-weight search for cost-sensitive training.

Non-minority classes stay at weight 1. Each minority class, rarest first,
starts at an integer weight ``a > 1`` and is nudged by two unequal steps.
The model over-fits the class when it predicts it too eagerly: precision
below recall, or the other classes losing F1. Then the weight drops by
``decrease_step``. It under-fits when recall is below precision (the class
is being missed), and the weight rises by ``increase_step``. A class's
search stops once the objective has not improved for ``patience``
candidates.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .data import Dataset
from .engine import ClassWeights
from .errors import ConfigError
from .metrics import MetricsReport

log = logging.getLogger(__name__)

Trainer = Callable[[Dataset, Dataset, ClassWeights], MetricsReport]

OBJECTIVES = ("minority-F1-mean",)


def objective_score(report: MetricsReport, target_classes: Sequence[str]) -> float:
    """Arithmetic mean of F1 over ``target_classes``."""
    if not target_classes:
        raise ConfigError("objective needs at least one target class")
    unknown = [c for c in target_classes if c not in report.class_names]
    if unknown:
        raise ConfigError(f"classes not in report: {unknown}")
    return float(np.mean([report.f1_of(c) for c in target_classes]))


@dataclass
class WeightSearchConfig:
    initial_weight: int = 10
    decrease_step: float = 2.0
    increase_step: float = 5.0
    patience: int = 3
    max_iterations: int = 20
    objective: str = "minority-F1-mean"
    min_improvement: float = 1e-3
    overfit_tolerance: float = 0.01

    def __post_init__(self) -> None:
        if int(self.initial_weight) != self.initial_weight or self.initial_weight <= 1:
            raise ConfigError("initial weight must be an integer greater than 1")
        if not (self.decrease_step > 0 and self.increase_step > 0):
            raise ConfigError("search steps must be positive")
        if self.decrease_step == self.increase_step:
            raise ConfigError("decrease and increase steps must differ")
        if self.max_iterations < 1 or self.patience < 1:
            raise ConfigError("max iterations and patience must be >= 1")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}")

    @classmethod
    def from_dict(cls, raw: dict | None) -> "WeightSearchConfig":
        try:
            return cls(**(raw or {}))
        except TypeError as exc:
            raise ConfigError(f"bad search settings: {exc}") from None


@dataclass
class SearchStep:
    iteration: int
    weights: tuple[float, ...]
    score: float
    target: str = ""
    action: str = "baseline"


@dataclass
class SearchTrace:
    class_names: list[str]
    steps: list[SearchStep] = field(default_factory=list)
    truncated: bool = False
    best_iteration: int = 0

    @property
    def baseline(self) -> SearchStep:
        return self.steps[0]

    def __len__(self) -> int:
        return len(self.steps)

    def to_csv(self) -> str:
        lines = ["iteration,target,action,score,weights"]
        for s in self.steps:
            w = json.dumps(ClassWeights(s.weights).to_mapping(self.class_names), sort_keys=False)
            lines.append(f'{s.iteration},{s.target},{s.action},{s.score!r},"{w.replace(chr(34), chr(34) * 2)}"')
        lines.append(f"# best_iteration={self.best_iteration} truncated={str(self.truncated).lower()}")
        return "\n".join(lines) + "\n"


def search_class_weights(
    train: Dataset,
    validation: Dataset,
    minority_classes: Sequence[str],
    config: WeightSearchConfig,
    trainer: Trainer,
) -> tuple[ClassWeights, SearchTrace]:
    """Coordinate search over minority-class weights, scored on ``validation``.

    The all-unit baseline is always evaluated first and stays a candidate,
    so the returned weights never score below it. Identical candidates are
    scored once and replayed from a cache.
    """
    names = list(train.class_names)
    minority = list(minority_classes)
    if not minority:
        raise ConfigError("no minority classes given")
    for c in minority:
        if c not in names:
            raise ConfigError(f"unknown minority class {c!r}")
    if len(set(minority)) >= len(names):
        raise ConfigError("minority classes must be a strict subset of all classes")
    majority_idx = [i for i, n in enumerate(names) if n not in minority]

    cache: dict[tuple[float, ...], MetricsReport] = {}

    def evaluate(w: tuple[float, ...]) -> MetricsReport:
        if w not in cache:
            cache[w] = trainer(train, validation, ClassWeights(w))
        return cache[w]

    def majority_f1(report: MetricsReport) -> float:
        return float(np.mean(report.f1[majority_idx]))

    trace = SearchTrace(names)
    best_w = (1.0,) * len(names)
    best_report = evaluate(best_w)
    best_score = objective_score(best_report, minority)
    trace.steps.append(SearchStep(0, best_w, best_score))
    baseline_major = majority_f1(best_report)

    counts = train.class_counts()
    order = sorted(minority, key=lambda c: (counts[c], names.index(c)))
    iteration = 0
    for cls in order:
        k = names.index(cls)
        w = float(config.initial_weight)
        going_up = True
        stale = 0
        while stale < config.patience:
            if iteration >= config.max_iterations:
                trace.truncated = True
                break
            iteration += 1
            cand = list(best_w)
            cand[k] = w
            cand_t = tuple(cand)
            report = evaluate(cand_t)
            score = objective_score(report, minority)
            if score > best_score + config.min_improvement:
                best_w, best_score, best_report = cand_t, score, report
                trace.best_iteration = iteration
                stale = 0
            else:
                stale += 1
            prec, rec = float(report.precision[k]), float(report.recall[k])
            if majority_f1(report) < baseline_major - config.overfit_tolerance or prec < rec:
                going_up, action = False, "decrease"
            elif rec < prec or rec == 0.0:
                going_up, action = True, "increase"
            else:
                action = "increase" if going_up else "decrease"
            trace.steps.append(SearchStep(iteration, cand_t, score, cls, action))
            log.info("search %s w=%g score=%.4f -> %s", cls, w, score, action)
            w = w + config.increase_step if going_up else max(1.0, w - config.decrease_step)
        if trace.truncated:
            break
    return ClassWeights(best_w), trace
