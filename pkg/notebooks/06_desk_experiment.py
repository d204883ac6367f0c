"""
Baseline, augmentation and class weights on the desk benchmark
==============================================================

Runs E1 (baseline), E2 (+VAE augmentation) and E3 (+class weights) on one
shared split and prints the minority and majority F1 of each. Takes about a
minute on one core.
"""
from pathlib import Path

from skewnet.config import load_config
from skewnet.experiment import minority_majority_f1, run_experiment

cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "botiot-mini.json")
result = run_experiment(cfg, self_check=True)

print(result.tables())
for variant, report in sorted(result.reports.items()):
    minority, majority = minority_majority_f1(report, cfg.minority_classes)
    print(f"{variant}: minority F1 {minority:.3f}  majority F1 {majority:.4f}")
print("hygiene", result.hygiene)
print("seconds per stage", {k: round(v, 1) for k, v in result.timings.items()})
