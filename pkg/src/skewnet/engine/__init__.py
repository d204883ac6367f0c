"""Small deterministic neural-network engine: float64 numpy, manual gradients."""
from .activations import activation_apply, relu, sigmoid, softmax
from .conv import Conv1D, conv1d_forward
from .gradcheck import (
    Batch,
    ClassifierObjective,
    GradReport,
    LayerProbe,
    ScaledGradients,
    gradient_check,
)
from .layers import Dense, Dropout, Flatten, Layer, Reshape, dense_forward, dropout_apply
from .loss import (
    EPS_CLIP,
    ClassWeights,
    mse,
    weighted_cross_entropy,
    weighted_cross_entropy_grad,
)
from .network import Sequential, backward_pass, loss_and_grads, minibatches
from .optim import AdamState, adam_step
from .recurrent import LSTM, FinalStates, bilstm_forward

__all__ = [
    "AdamState", "Batch", "ClassWeights", "ClassifierObjective", "Conv1D", "Dense", "Dropout",
    "EPS_CLIP", "FinalStates", "Flatten", "GradReport", "LSTM", "Layer", "LayerProbe", "Reshape",
    "ScaledGradients", "Sequential", "activation_apply", "adam_step", "backward_pass",
    "bilstm_forward", "conv1d_forward", "dense_forward", "dropout_apply", "gradient_check",
    "loss_and_grads", "minibatches", "mse", "relu", "sigmoid", "softmax", "weighted_cross_entropy",
    "weighted_cross_entropy_grad",
]
