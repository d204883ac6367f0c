"""Flow-record datasets: CSV ingest, cleaning, per-class sampling, scaling, splits,
and seeded synthetic benchmarks."""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError, DimensionError, SchemaError
from .rng import stream


@dataclass(frozen=True)
class DatasetSchema:
    """Column layout of a flow-record CSV.

    ``features`` may be left empty to take every column that is neither the
    label nor drop-listed. ``classes`` pins the label-to-index order;
    without it classes are indexed in first-seen order.
    """

    label: str = "label"
    features: tuple[str, ...] = ()
    drop: tuple[str, ...] = ()
    classes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "drop", tuple(self.drop))
        object.__setattr__(self, "classes", tuple(self.classes))
        if self.label in self.features:
            raise ConfigError(f"label column {self.label!r} listed as a feature")
        overlap = set(self.drop) & set(self.features)
        if overlap:
            raise ConfigError(f"columns both retained and dropped: {sorted(overlap)}")
        if self.label in self.drop:
            raise ConfigError("the label column cannot be dropped")

    @classmethod
    def from_dict(cls, raw: Mapping) -> "DatasetSchema":
        return cls(
            label=raw.get("label", "label"),
            features=tuple(raw.get("features", ())),
            drop=tuple(raw.get("drop", ())),
            classes=tuple(raw.get("classes", ())),
        )

    @property
    def d(self) -> int:
        return len(self.features)


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_names: list[str]
    feature_names: list[str] = field(default_factory=list)
    synthetic: np.ndarray | None = None
    rejects: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise DimensionError(f"features must be 2-D, got shape {self.features.shape}")
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != (self.features.shape[0],):
            raise DimensionError("label count does not match row count")
        self.class_names = list(self.class_names)
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise DataError("label outside the class registry")
        if not self.feature_names:
            self.feature_names = [f"f{i}" for i in range(self.features.shape[1])]
        if len(self.feature_names) != self.features.shape[1]:
            raise DimensionError("feature name count does not match feature width")
        if self.synthetic is None:
            self.synthetic = np.zeros(len(self.labels), dtype=bool)
        self.synthetic = np.asarray(self.synthetic, dtype=bool)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_counts(self) -> dict[str, int]:
        counts = np.bincount(self.labels, minlength=self.n_classes)
        return {name: int(c) for name, c in zip(self.class_names, counts)}

    def class_index(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise ConfigError(f"unknown class {name!r}; known: {self.class_names}") from None

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return replace(
            self,
            features=self.features[idx],
            labels=self.labels[idx],
            synthetic=self.synthetic[idx],
            rejects=[],
        )

    def with_features(self, features: np.ndarray, feature_names: Sequence[str] | None = None) -> "Dataset":
        features = np.asarray(features, dtype=np.float64)
        names = list(feature_names) if feature_names is not None else [f"z{i}" for i in range(features.shape[1])]
        return Dataset(features, self.labels.copy(), list(self.class_names), names, self.synthetic.copy())

    def row_hashes(self) -> np.ndarray:
        """Stable 64-bit identity per row, from the raw feature bytes and class name."""
        out = np.empty(len(self), dtype=np.uint64)
        feats = np.ascontiguousarray(self.features)
        for i in range(len(self)):
            h = hashlib.blake2b(feats[i].tobytes(), digest_size=8)
            h.update(self.class_names[self.labels[i]].encode("utf-8"))
            out[i] = int.from_bytes(h.digest(), "little")
        return out

    def canonical_order(self) -> np.ndarray:
        """Permutation sorting rows by (label, features); ties keep original order."""
        keys = [self.features[:, j] for j in range(self.n_features - 1, -1, -1)] + [self.labels]
        return np.lexsort(keys)

    @staticmethod
    def concat(parts: Sequence["Dataset"]) -> "Dataset":
        first = parts[0]
        for p in parts[1:]:
            if p.class_names != first.class_names or p.n_features != first.n_features:
                raise DataError("cannot concatenate datasets with different registries or widths")
        return Dataset(
            np.concatenate([p.features for p in parts]),
            np.concatenate([p.labels for p in parts]),
            list(first.class_names),
            list(first.feature_names),
            np.concatenate([p.synthetic for p in parts]),
        )


# ---------------------------------------------------------------- CSV

def load_csv(path: str | Path, schema: DatasetSchema, synthetic_column: str | None = None) -> Dataset:
    """Parse a flow-record CSV.

    Drop-listed columns are skipped at parse time, since they are often
    non-numeric (addresses, identifiers). Rows with an unparseable cell or
    the wrong field count are rejected and listed in ``Dataset.rejects`` as
    ``(line number, reason)``; non-finite numbers such as ``inf`` parse and
    are left for :func:`clean`. If ``synthetic_column`` is in the header it
    is read as the 0/1 synthetic-row mask rather than as a feature.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if schema.label not in header:
            raise SchemaError(f"{path}: missing label column {schema.label!r}")
        synth_col = header.index(synthetic_column) if synthetic_column in header else None
        if schema.features:
            missing = [f for f in schema.features if f not in header]
            if missing:
                raise SchemaError(f"{path}: missing feature columns {missing}")
            feature_names = list(schema.features)
        else:
            skip = set(schema.drop) | {schema.label, synthetic_column}
            feature_names = [h for h in header if h not in skip]
        cols = [header.index(f) for f in feature_names]
        label_col = header.index(schema.label)

        registry: dict[str, int] = {c: i for i, c in enumerate(schema.classes)}
        rows: list[list[float]] = []
        labels: list[int] = []
        flags: list[bool] = []
        rejects: list[tuple[int, str]] = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                rejects.append((lineno, f"expected {len(header)} fields, got {len(rec)}"))
                continue
            try:
                values = [float(rec[c]) for c in cols]
            except ValueError as exc:
                rejects.append((lineno, f"unparseable numeric cell: {exc}"))
                continue
            name = rec[label_col].strip()
            if name not in registry:
                if schema.classes:
                    rejects.append((lineno, f"label {name!r} not in the pinned class list"))
                    continue
                registry[name] = len(registry)
            rows.append(values)
            labels.append(registry[name])
            flags.append(synth_col is not None and rec[synth_col].strip() == "1")

    class_names = sorted(registry, key=registry.get)
    features = np.array(rows, dtype=np.float64).reshape(len(rows), len(feature_names))
    return Dataset(
        features, np.array(labels, dtype=np.int64), class_names, feature_names, np.array(flags, dtype=bool), rejects
    )


def write_csv(dataset: Dataset, path: str | Path, label: str = "label", synthetic_column: str | None = None) -> None:
    """Write features at full precision plus the class name; the inverse of :func:`load_csv`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        extra = [synthetic_column] if synthetic_column else []
        writer.writerow(list(dataset.feature_names) + [label] + extra)
        for row, y, syn in zip(dataset.features.tolist(), dataset.labels.tolist(), dataset.synthetic.tolist()):
            tail = [str(int(syn))] if synthetic_column else []
            writer.writerow([repr(v) for v in row] + [dataset.class_names[y]] + tail)


def write_reject_log(dataset: Dataset, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for lineno, reason in dataset.rejects:
            fh.write(f"line {lineno}: {reason}\n")


# ---------------------------------------------------------------- cleaning / sampling

def clean(dataset: Dataset, schema: DatasetSchema | None = None) -> Dataset:
    """Drop schema-listed columns, then every row holding a non-finite value."""
    drop = set(schema.drop) if schema is not None else set()
    keep_cols = [j for j, name in enumerate(dataset.feature_names) if name not in drop]
    feats = dataset.features[:, keep_cols]
    ok = np.all(np.isfinite(feats), axis=1)
    return Dataset(
        feats[ok],
        dataset.labels[ok],
        list(dataset.class_names),
        [dataset.feature_names[j] for j in keep_cols],
        dataset.synthetic[ok],
        rejects=list(dataset.rejects),
    )


def sample_per_class(dataset: Dataset, caps: Mapping[str, float], seed: int) -> Dataset:
    """Keep at most ``caps[class]`` rows per class, uniformly without replacement.

    Classes absent from ``caps`` (or capped at infinity) are kept whole. Rows
    are canonically sorted first, so the result does not depend on input order.
    """
    for name, cap in caps.items():
        dataset.class_index(name)
        if not cap > 0:
            raise ConfigError(f"cap for {name!r} must be positive, got {cap}")
    order = dataset.canonical_order()
    keep: list[np.ndarray] = []
    for k, name in enumerate(dataset.class_names):
        rows = order[dataset.labels[order] == k]
        cap = caps.get(name, math.inf)
        if cap < len(rows):
            rng = stream(seed, "sample_per_class", name)
            chosen = np.sort(rng.choice(len(rows), size=int(cap), replace=False))
            rows = rows[chosen]
        keep.append(rows)
    return dataset.subset(np.concatenate(keep) if keep else np.array([], dtype=np.int64))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Per-class split with ``round(fraction * count)`` rows to train, the rest to test."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train fraction must lie in (0, 1), got {train_fraction}")
    order = dataset.canonical_order()
    train_idx, test_idx = [], []
    for k, name in enumerate(dataset.class_names):
        rows = order[dataset.labels[order] == k]
        if len(rows) == 0:
            continue
        if len(rows) < 2:
            raise DataError(f"class {name!r} has a single row; cannot stratify")
        n_train = _round_half_up(train_fraction * len(rows))
        perm = stream(seed, "stratified_split", name).permutation(len(rows))
        train_idx.append(np.sort(rows[perm[:n_train]]))
        test_idx.append(np.sort(rows[perm[n_train:]]))
    empty = np.array([], dtype=np.int64)
    train = dataset.subset(np.concatenate(train_idx) if train_idx else empty)
    test = dataset.subset(np.concatenate(test_idx) if test_idx else empty)
    return train, test


# ---------------------------------------------------------------- scaling

@dataclass(frozen=True)
class Scaler:
    minimum: np.ndarray
    maximum: np.ndarray

    def to_dict(self) -> dict:
        return {"min": self.minimum.tolist(), "max": self.maximum.tolist()}

    @classmethod
    def from_dict(cls, raw: Mapping) -> "Scaler":
        return cls(np.asarray(raw["min"], dtype=np.float64), np.asarray(raw["max"], dtype=np.float64))


def fit_scaler(features: np.ndarray) -> Scaler:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise DataError("scaler needs a non-empty 2-D feature matrix")
    return Scaler(features.min(axis=0), features.max(axis=0))


def apply_scaler(scaler: Scaler, features: np.ndarray) -> np.ndarray:
    """Min-max map fitted columns onto [0, 1]; constant columns become 0. No clipping."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != scaler.minimum.shape[0]:
        raise DimensionError(f"scaler fitted on {scaler.minimum.shape[0]} features, got {features.shape}")
    span = scaler.maximum - scaler.minimum
    safe = np.where(span > 0, span, 1.0)
    out = (features - scaler.minimum) / safe
    out[:, span == 0] = 0.0
    return out


def invert_scaler(scaler: Scaler, scaled: np.ndarray) -> np.ndarray:
    span = scaler.maximum - scaler.minimum
    return np.asarray(scaled, dtype=np.float64) * span + scaler.minimum


def scale_dataset(scaler: Scaler, dataset: Dataset) -> Dataset:
    return replace(dataset, features=apply_scaler(scaler, dataset.features), rejects=[])


# ---------------------------------------------------------------- synthetic benchmarks

@dataclass(frozen=True)
class Cluster:
    center: tuple[float, ...]
    spread: float
    weight: float = 1.0


@dataclass(frozen=True)
class SynthSpec:
    """Seeded Gaussian-mixture benchmark.

    A row of class ``k`` drawn from one of its clusters is
    ``separability * M (center + spread * e1) + noise * e2`` with ``e1, e2``
    standard normal and ``M`` the optional ``[d x r]`` mixing matrix (identity
    when absent, so centers live directly in feature space). A mixing matrix
    gives the low-rank, correlated structure typical of flow features. The
    class-specific part vanishes at separability 0, leaving every class with
    the same ``N(0, noise^2)`` distribution.
    """

    counts: Mapping[str, int]
    clusters: Mapping[str, tuple[Cluster, ...]]
    separability: float = 1.0
    noise: float = 0.05
    seed: int = 0
    mixing: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self) -> None:
        if len(self.counts) < 2:
            raise ConfigError("a benchmark needs at least two classes")
        if set(self.counts) != set(self.clusters):
            raise ConfigError("counts and clusters must name the same classes")
        dims = {len(c.center) for cl in self.clusters.values() for c in cl}
        if len(dims) != 1:
            raise ConfigError("all cluster centers must share one dimension")
        for name, n in self.counts.items():
            if int(n) < 1:
                raise ConfigError(f"class {name!r} count must be positive")
            if not self.clusters[name]:
                raise ConfigError(f"class {name!r} has no clusters")
        if self.separability < 0 or self.noise < 0:
            raise ConfigError("separability and noise must be non-negative")
        if self.mixing is not None:
            m = np.asarray(self.mixing, dtype=np.float64)
            if m.ndim != 2 or m.shape[1] != dims.pop():
                raise ConfigError("mixing matrix must be [d x r] with r the center dimension")

    @property
    def n_factors(self) -> int:
        return len(next(iter(self.clusters.values()))[0].center)

    @property
    def n_features(self) -> int:
        return len(self.mixing) if self.mixing is not None else self.n_factors

    def to_dict(self) -> dict:
        return {
            "counts": dict(self.counts),
            "clusters": {
                k: [{"center": list(c.center), "spread": c.spread, "weight": c.weight} for c in v]
                for k, v in self.clusters.items()
            },
            "separability": self.separability,
            "noise": self.noise,
            "seed": self.seed,
            **({"mixing": [list(r) for r in self.mixing]} if self.mixing is not None else {}),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "SynthSpec":
        clusters = {
            k: tuple(Cluster(tuple(c["center"]), float(c["spread"]), float(c.get("weight", 1.0))) for c in v)
            for k, v in raw["clusters"].items()
        }
        return cls(
            counts={k: int(v) for k, v in raw["counts"].items()},
            clusters=clusters,
            separability=float(raw.get("separability", 1.0)),
            noise=float(raw.get("noise", 0.05)),
            seed=int(raw.get("seed", 0)),
            mixing=None if raw.get("mixing") is None else tuple(tuple(float(v) for v in r) for r in raw["mixing"]),
        )


def generate_synthetic_benchmark(spec: SynthSpec) -> Dataset:
    d, r = spec.n_features, spec.n_factors
    mixing = np.asarray(spec.mixing, dtype=np.float64) if spec.mixing is not None else None
    names = list(spec.counts)
    feats, labels = [], []
    for k, name in enumerate(names):
        n = int(spec.counts[name])
        rng = stream(spec.seed, "synth", name)
        cl = spec.clusters[name]
        w = np.array([c.weight for c in cl], dtype=np.float64)
        assign = rng.choice(len(cl), size=n, p=w / w.sum())
        centers = np.array([c.center for c in cl], dtype=np.float64)[assign]
        spreads = np.array([c.spread for c in cl], dtype=np.float64)[assign][:, None]
        e1 = rng.standard_normal((n, r))
        e2 = rng.standard_normal((n, d))
        structured = centers + spreads * e1
        if mixing is not None:
            structured = structured @ mixing.T
        feats.append(spec.separability * structured + spec.noise * e2)
        labels.append(np.full(n, k, dtype=np.int64))
    return Dataset(
        np.concatenate(feats),
        np.concatenate(labels),
        names,
        [f"f{j:02d}" for j in range(d)],
    )


BOTIOT_MINI_COUNTS = {"c0": 31_950, "c1": 27_360, "c2": 600, "c3": 60, "c4": 30}


def botiot_mini(
    seed: int = 0,
    n_features: int = 28,
    separability: float = 1.0,
    n_factors: int = 6,
    minority_offset: float = 1.6,
) -> SynthSpec:
    """Desk-scale stand-in for the five-class Bot-IoT skew (60,000 rows).

    ``c3`` (0.1%) and ``c4`` (0.05%) are the minority classes. Classes are
    clusters in an ``n_factors``-dimensional factor space mixed into
    ``n_features`` correlated columns. Each minority cluster sits
    ``minority_offset`` away from one of the two large clusters, close enough
    that an unweighted model can profitably ignore it. Cluster geometry comes
    from a fixed layout stream; ``seed`` only drives row sampling.
    """
    layout = stream(20240501, "botiot-mini-layout")
    r = n_factors

    def unit() -> np.ndarray:
        v = layout.standard_normal(r)
        return v / np.linalg.norm(v)

    c0 = 3.0 * unit()
    c1 = 3.0 * unit()
    c2 = 3.0 * unit()
    c3 = c0 + minority_offset * unit()
    c4 = c1 + minority_offset * unit()
    mixing = layout.standard_normal((n_features, r)) / np.sqrt(r)
    clusters = {
        "c0": (Cluster(tuple(c0), 0.35),),
        "c1": (Cluster(tuple(c1), 0.35),),
        "c2": (Cluster(tuple(c2), 0.30),),
        "c3": (Cluster(tuple(c3), 0.20),),
        "c4": (Cluster(tuple(c4), 0.20),),
    }
    return SynthSpec(
        dict(BOTIOT_MINI_COUNTS), clusters, separability=separability, noise=0.05, seed=seed,
        mixing=tuple(tuple(row) for row in mixing),
    )
