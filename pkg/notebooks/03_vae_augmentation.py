"""
Growing a rare class with a per-class VAE
==========================================

A small convolutional VAE is fitted to one class and sampled from the
prior. The plan caps the number of generated rows below the class size.
"""
import numpy as np

from skewnet.data import Dataset
from skewnet.synthesizer import VaeConfig, augment_dataset, generate, make_plan, plan_from_fraction, train_vae

print("65% of 5261 ->", plan_from_fraction(5261, 0.65))
print("80% of 1587 ->", plan_from_fraction(1587, 0.80))

rng = np.random.default_rng(0)
common = np.clip(rng.normal(0.3, 0.1, (900, 8)), 0, 1)
rare = np.clip(rng.normal(0.7, 0.05, (60, 8)) + np.linspace(-0.1, 0.1, 8), 0, 1)
ds = Dataset(np.vstack([common, rare]), np.repeat([0, 1], [900, 60]), ["common", "rare"])

vae = train_vae(rare, VaeConfig(epochs=300, seed=0))
print("loss first/last epoch:", round(vae.loss_history[0], 4), round(vae.loss_history[-1], 4))

fake = generate(vae, 5000, np.random.default_rng(1))
print("real mean     ", np.round(rare.mean(axis=0), 3))
print("generated mean", np.round(fake.mean(axis=0), 3))

plan = make_plan(ds, "rare", fraction=0.5)
out = augment_dataset(ds, [plan], {"rare": vae}, 2)
print(ds.class_counts(), "->", out.class_counts(), "synthetic rows:", int(out.synthetic.sum()))
