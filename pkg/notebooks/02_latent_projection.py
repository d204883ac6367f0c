"""
Compressing flow features with the auto-encoder
================================================

The projector learns a small latent space on the training split only; the
same encoder is then applied to the test split.
"""
import numpy as np

from skewnet.data import botiot_mini, generate_synthetic_benchmark, fit_scaler, scale_dataset, stratified_split
from skewnet.projector import ProjectorConfig, encode, reconstruction_error, train_autoencoder

data = generate_synthetic_benchmark(botiot_mini(seed=0))
print(data.class_counts())

train, test = stratified_split(data, 0.8, seed=0)
scaler = fit_scaler(train.features)
train, test = scale_dataset(scaler, train), scale_dataset(scaler, test)

for latent in (2, 4, 8):
    ae = train_autoencoder(train.features, ProjectorConfig(latent_dim=latent, epochs=10))
    print(f"latent {latent}: train mse {reconstruction_error(ae, train.features):.5f}, "
          f"test mse {reconstruction_error(ae, test.features):.5f}")

z = encode(ae, test.features)
print(z.shape, np.round(z[:3], 3))
