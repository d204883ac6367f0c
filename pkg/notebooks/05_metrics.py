"""
Per-class metrics from a confusion matrix
=========================================
"""
import numpy as np

from skewnet.metrics import emit_report, evaluate_predictions, parse_report

y_true = np.array([0, 0, 0, 0, 1, 1, 1, 2, 2, 2])
y_pred = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2, 0])
report = evaluate_predictions(y_true, y_pred, ["Normal", "DoS", "Theft"])

print(report.confusion)
print(emit_report(report))

# the machine format round-trips
text = emit_report(report, "machine")
print(text)
assert np.array_equal(parse_report(text).confusion, report.confusion)
print("accuracy", report.accuracy, "micro precision", report.micro_precision)
