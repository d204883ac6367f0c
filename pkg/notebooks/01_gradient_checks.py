"""
Checking hand-written backprop against finite differences
==========================================================

Every layer in the engine carries its own backward pass. Here we probe a
few of them and both classifier architectures with central differences.
"""
import numpy as np

from skewnet.classifiers import ArchitectureSpec, build_classifier
from skewnet.engine import LSTM, Batch, ClassWeights, Conv1D, Dense, LayerProbe, gradient_check

rng = np.random.default_rng(0)

# single layers: a random projection turns the output into a scalar loss
x = rng.standard_normal((4, 5))
print("dense/tanh  ", gradient_check(LayerProbe(Dense(5, 3, "tanh", rng=rng), x, rng=rng), None).global_max)
print("conv1d/same ", gradient_check(LayerProbe(Conv1D(2, 3, 3, 2, "same", "linear", rng=rng), rng.standard_normal((2, 2, 9)), rng=rng), None).global_max)
print("bi-lstm     ", gradient_check(LayerProbe(LSTM(3, 4, "bidirectional", rng=rng), rng.standard_normal((2, 5, 3)), rng=rng), None).global_max)

# whole classifiers under a class-weighted loss
weights = ClassWeights((1.0, 1.0, 10.0))
for kind in ("DNN", "BLSTM"):
    model = build_classifier(ArchitectureSpec(kind, 6, 3, (12, 10, 8, 8)), seed=1)
    # nudge biases off zero so no ReLU sits exactly on its kink
    for name, p in model.parameters().items():
        if name.endswith(".b"):
            p += rng.normal(0, 0.1, p.shape)
    batch = Batch(rng.standard_normal((5, 6)), rng.integers(0, 3, 5), weights, dropout_seed=2)
    print(f"{kind:<12}", f"max relative error {gradient_check(model, batch).global_max:.2e}")
