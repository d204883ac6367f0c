"""
Searching for minority class weights
====================================

With unit weights a 0.5% class is often ignored. The search raises its
weight while recall trails precision and backs off once the majority
classes start to suffer.
"""
from skewnet.classifiers import ArchitectureSpec, TrainConfig
from skewnet.data import Cluster, SynthSpec, generate_synthetic_benchmark, stratified_split
from skewnet.experiment import make_trainer
from skewnet.weighting import WeightSearchConfig, search_class_weights

spec = SynthSpec(
    {"a": 2000, "b": 1980, "r": 20},
    {"a": (Cluster((0.0, 0.0), 0.5),), "b": (Cluster((3.0, 0.0), 0.5),), "r": (Cluster((0.0, 1.8), 0.3),)},
    seed=0,
)
train, val = stratified_split(generate_synthetic_benchmark(spec), 0.5, 1)
trainer = make_trainer(ArchitectureSpec("DNN", 2, 3, (16, 16, 8, 8)), TrainConfig(epochs=15, batch_size=64), 0)

weights, trace = search_class_weights(train, val, ["r"], WeightSearchConfig(max_iterations=6, patience=2), trainer)
print(trace.to_csv())
print("chosen:", weights.to_mapping(train.class_names))
