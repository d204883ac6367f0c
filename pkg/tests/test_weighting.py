import numpy as np
import pytest

from skewnet.classifiers import ArchitectureSpec, TrainConfig
from skewnet.data import Cluster, Dataset, SynthSpec, generate_synthetic_benchmark, stratified_split
from skewnet.engine import ClassWeights
from skewnet.errors import ConfigError
from skewnet.experiment import make_trainer
from skewnet.metrics import per_class_metrics
from skewnet.weighting import WeightSearchConfig, objective_score, search_class_weights

NAMES = ["a", "b", "r"]


def report_with(f1_r, prec_r=None, rec_r=None, major=1.0):
    """A report whose per-class numbers are set directly."""
    rep = per_class_metrics(np.eye(3, dtype=np.int64), NAMES)
    rep.f1 = np.array([major, major, f1_r])
    rep.precision = np.array([1.0, 1.0, f1_r if prec_r is None else prec_r])
    rep.recall = np.array([1.0, 1.0, f1_r if rec_r is None else rec_r])
    return rep


@pytest.fixture
def tiny():
    ds = Dataset(np.zeros((30, 2)), np.repeat([0, 1, 2], [20, 8, 2]), NAMES)
    return ds, ds


class ScriptedTrainer:
    """Trainer oracle: the report is a pure function of the minority weight."""

    def __init__(self, fn):
        self.fn = fn
        self.calls = []

    def __call__(self, train, validation, weights: ClassWeights):
        self.calls.append(weights.values)
        return self.fn(weights.values[2])


class TestObjective:
    def test_perfect(self):
        assert objective_score(report_with(1.0), ["r"]) == 1.0

    def test_hand_mean(self):
        rep = report_with(0.53)
        rep.f1[1] = 0.4
        assert objective_score(rep, ["b", "r"]) == pytest.approx(0.465)

    def test_unknown(self):
        with pytest.raises(ConfigError):
            objective_score(report_with(1.0), ["zzz"])

    def test_empty(self):
        with pytest.raises(ConfigError):
            objective_score(report_with(1.0), [])


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [{"initial_weight": 1}, {"initial_weight": 2.5}, {"decrease_step": 3, "increase_step": 3}, {"max_iterations": 0}, {"objective": "acc"}]
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            WeightSearchConfig(**kw)


class TestSearchContract:
    def test_balanced_returns_unit(self, tiny):
        trainer = ScriptedTrainer(lambda w: report_with(0.9))
        weights, trace = search_class_weights(*tiny, ["r"], WeightSearchConfig(patience=3), trainer)
        assert weights.values == (1.0, 1.0, 1.0)
        assert trace.baseline.weights == (1.0, 1.0, 1.0) and trace.baseline.iteration == 0
        assert len(trace) == 1 + 3

    def test_peak_found_and_clamped(self, tiny):
        # F1 peaks at w=20; recall < precision below it, the reverse above
        def fn(w):
            return report_with(max(0.0, 1 - abs(w - 20) / 40), prec_r=1.0 if w < 20 else 0.5, rec_r=0.5 if w < 20 else 1.0)

        weights, trace = search_class_weights(*tiny, ["r"], WeightSearchConfig(), ScriptedTrainer(fn))
        assert weights.values[2] == 20.0
        assert all(min(s.weights) >= 1.0 for s in trace.steps)
        assert trace.steps[trace.best_iteration].weights == weights.values

    def test_overfit_decreases(self, tiny):
        trainer = ScriptedTrainer(lambda w: report_with(0.5, major=0.9 if w > 1 else 1.0))
        _, trace = search_class_weights(*tiny, ["r"], WeightSearchConfig(initial_weight=10, decrease_step=2, increase_step=5), trainer)
        assert [s.weights[2] for s in trace.steps[1:4]] == [10.0, 8.0, 6.0]
        assert trace.steps[1].action == "decrease"

    def test_underfit_increases(self, tiny):
        trainer = ScriptedTrainer(lambda w: report_with(0.3, prec_r=0.9, rec_r=0.2))
        _, trace = search_class_weights(*tiny, ["r"], WeightSearchConfig(initial_weight=4, decrease_step=2, increase_step=5), trainer)
        assert [s.weights[2] for s in trace.steps[1:4]] == [4.0, 9.0, 14.0]

    def test_never_below_baseline(self, tiny):
        trainer = ScriptedTrainer(lambda w: report_with(0.8 if w == 1.0 else 0.1))
        weights, trace = search_class_weights(*tiny, ["r"], WeightSearchConfig(), trainer)
        assert weights.values == (1.0, 1.0, 1.0)

    def test_truncation(self, tiny):
        trainer = ScriptedTrainer(lambda w: report_with(min(1.0, w / 1000), prec_r=1.0, rec_r=0.1))
        _, trace = search_class_weights(*tiny, ["r"], WeightSearchConfig(max_iterations=4), trainer)
        assert trace.truncated and len(trace) == 5
        assert "truncated=true" in trace.to_csv()

    def test_cache(self, tiny):
        trainer = ScriptedTrainer(lambda w: report_with(0.5, major=0.9 if w > 1 else 1.0))
        search_class_weights(*tiny, ["r"], WeightSearchConfig(initial_weight=3, decrease_step=2, increase_step=5, patience=4), trainer)
        assert len(trainer.calls) == len(set(trainer.calls))

    def test_rarest_first(self):
        ds = Dataset(np.zeros((30, 2)), np.repeat([0, 1, 2], [20, 2, 8]), ["a", "r2", "r1"])
        seen = []

        def trainer(train, val, w):
            seen.append(w.values)
            return per_class_metrics(np.eye(3, dtype=np.int64), train.class_names)

        search_class_weights(ds, ds, ["r1", "r2"], WeightSearchConfig(patience=1), trainer)
        assert seen[1][1] == 10.0 and seen[1][2] == 1.0

    @pytest.mark.parametrize("minority", [[], ["nope"], ["a", "b", "r"]])
    def test_bad_minority(self, tiny, minority):
        with pytest.raises(ConfigError):
            search_class_weights(*tiny, minority, WeightSearchConfig(), ScriptedTrainer(lambda w: report_with(1)))


def test_real_benchmark_beats_baseline():
    spec = SynthSpec(
        {"a": 2000, "b": 1980, "r": 20},
        {"a": (Cluster((0.0, 0.0), 0.5),), "b": (Cluster((3.0, 0.0), 0.5),), "r": (Cluster((0.0, 1.8), 0.3),)},
        seed=0,
    )
    ds = generate_synthetic_benchmark(spec)
    assert ds.class_counts()["r"] / len(ds) == pytest.approx(0.005)
    train, val = stratified_split(ds, 0.5, 1)
    trainer = make_trainer(ArchitectureSpec("DNN", 2, 3, (16, 16, 8, 8)), TrainConfig(epochs=15, batch_size=64), 0)
    weights, trace = search_class_weights(train, val, ["r"], WeightSearchConfig(max_iterations=6, patience=2), trainer)
    best = max(s.score for s in trace.steps)
    assert best > trace.baseline.score
    assert weights.values[2] > 1.0
