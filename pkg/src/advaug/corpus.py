"""Synthetic parallel corpus with four test conditions.

Clean samples come from class-conditional Gaussians. Two corruptions are
layered on top:

* **noise**: additive Gaussian noise whose standard deviation is drawn
  once per group of ``noise_group`` consecutive samples from
  ``noise_std``, shaped across feature dimensions by a fixed profile;
* **channel**: a fixed affine map ``x -> x @ W.T + b`` with
  ``W = I + channel_scale * R / sqrt(d)``, drawn once per corpus.

Noise is applied first, then the channel. Test and dev splits carry the same
clean samples under condition A (clean), B (noise), C (channel) and
D (noise + channel); B and D share one noise draw. The noisy training set
contains noise only, so the channel is an unseen mismatch at test time.

Training labels can carry label noise (``label_noise``), standing in for
alignment errors in frame labels: a random subset of training samples has
its labels shuffled among itself, which keeps the class counts exact. Dev
and test labels are always correct.

Every split is standardised with the per-dimension mean and standard
deviation of the raw noisy training set.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import container
from .numerics import matmul, substream

CONDITIONS_ORDER = ("A", "B", "C", "D")
KIND = "CORPUS"
VERSION = 1


@dataclass(frozen=True)
class Condition:
    tag: str
    noise: bool
    channel: bool


CONDITIONS = {
    "A": Condition("A", False, False),
    "B": Condition("B", True, False),
    "C": Condition("C", False, True),
    "D": Condition("D", True, True),
}


class CorpusError(ValueError):
    """Invalid corpus spec or a corpus that breaks its invariants."""


@dataclass(frozen=True)
class CorpusSpec:
    n_classes: int = 10
    dim: int = 20
    n_train: int = 4000
    n_dev: int = 1000
    n_test: int = 2000
    separation: float = 3.0  # class means sit on a sphere of radius separation * sqrt(2) * within_std
    within_std: float = 1.0
    noise_std: tuple[float, float] = (0.5, 1.5)
    noise_group: int = 10
    noise_profile: str = "decay"  # "flat" or "decay"
    noise_decay: float = 10.0
    clean_fraction: float = 0.25  # share of training noise groups left clean
    channel_scale: float = 0.35
    channel_bias: float = 1.0
    label_noise: float = 0.3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "noise_std", tuple(float(v) for v in self.noise_std))
        self.validate()

    def validate(self):
        for name in ("n_classes", "dim", "n_train", "n_dev", "n_test", "noise_group"):
            if getattr(self, name) < 1:
                raise CorpusError(f"{name} must be positive")
        if self.n_classes < 2:
            raise CorpusError("need at least two classes")
        lo, hi = self.noise_std
        if not (0.0 <= lo <= hi) or len(self.noise_std) != 2:
            raise CorpusError("noise_std must be a range lo <= hi with lo >= 0")
        if self.separation <= 0 or self.within_std <= 0:
            raise CorpusError("separation and within_std must be positive")
        if self.noise_profile not in ("flat", "decay"):
            raise CorpusError("noise_profile must be 'flat' or 'decay'")
        if self.noise_decay <= 0:
            raise CorpusError("noise_decay must be positive")
        if not 0.0 <= self.clean_fraction <= 1.0 or not 0.0 <= self.label_noise <= 1.0:
            raise CorpusError("fractions must lie in [0, 1]")
        if self.channel_scale < 0 or self.channel_bias < 0:
            raise CorpusError("channel magnitudes must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise_std"] = list(self.noise_std)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise CorpusError(f"unknown corpus keys: {sorted(unknown)}")
        return cls(**d)


REFERENCE_CONFIG = Path(__file__).with_name("configs") / "reference.json"


def reference_spec(**overrides) -> CorpusSpec:
    """The frozen reference corpus (``configs/reference.json``)."""
    d = json.loads(REFERENCE_CONFIG.read_text())["corpus"]
    d.update(overrides)
    return CorpusSpec.from_dict(d)


@dataclass(frozen=True)
class Corruption:
    """Corpus-wide corruption parameters, in raw (unstandardised) feature space."""

    channel_matrix: np.ndarray
    channel_offset: np.ndarray
    noise_profile: np.ndarray
    noise_std: tuple[float, float]
    noise_group: int

    def channel(self, x: np.ndarray) -> np.ndarray:
        return matmul(x, self.channel_matrix.T) + self.channel_offset

    def noise(self, x: np.ndarray, rng: np.random.Generator, clean_fraction: float = 0.0) -> np.ndarray:
        n, d = x.shape
        groups = -(-n // self.noise_group)
        stds = rng.uniform(self.noise_std[0], self.noise_std[1], size=groups)
        if clean_fraction > 0:
            stds = np.where(rng.random(groups) < clean_fraction, 0.0, stds)
        per_sample = np.repeat(stds, self.noise_group)[:n]
        return x + per_sample[:, None] * self.noise_profile * rng.standard_normal((n, d))


def apply_condition(features: np.ndarray, cond: Condition | str, corruption: Corruption, rng: np.random.Generator) -> np.ndarray:
    """Corrupt raw features per the condition flags; noise first, then channel.

    Condition A returns the input unchanged. ``rng`` is only consumed when
    noise is on.
    """
    if isinstance(cond, str):
        cond = CONDITIONS[cond]
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != corruption.channel_matrix.shape[0]:
        raise CorpusError(f"features {x.shape} do not match corruption dimension {corruption.channel_matrix.shape[0]}")
    if cond.noise:
        x = corruption.noise(x, rng)
    if cond.channel:
        x = corruption.channel(x)
    return x


@dataclass
class ConditionCorpus:
    spec: CorpusSpec
    train_clean: np.ndarray
    train_noisy: np.ndarray
    train_labels: np.ndarray
    dev: dict[str, np.ndarray]
    dev_labels: np.ndarray
    test: dict[str, np.ndarray]
    test_labels: np.ndarray
    corruption: Corruption
    norm_mean: np.ndarray
    norm_std: np.ndarray
    class_means: np.ndarray = field(repr=False, default=None)

    def split(self, name: str) -> tuple[dict[str, np.ndarray], np.ndarray]:
        if name == "dev":
            return self.dev, self.dev_labels
        if name == "test":
            return self.test, self.test_labels
        if name == "train":
            return {"clean": self.train_clean, "noisy": self.train_noisy}, self.train_labels
        raise CorpusError(f"no split named {name!r}")

    def standardize(self, raw: np.ndarray) -> np.ndarray:
        return (raw - self.norm_mean) / self.norm_std

    def unstandardize(self, x: np.ndarray) -> np.ndarray:
        return x * self.norm_std + self.norm_mean

    def validate(self) -> None:
        """Raise ``CorpusError`` unless every corpus invariant holds."""
        s = self.spec
        if self.train_clean.shape != (s.n_train, s.dim) or self.train_noisy.shape != self.train_clean.shape:
            raise CorpusError("training sets are not parallel")
        if self.train_labels.shape != (s.n_train,):
            raise CorpusError("training labels do not match the training sets")
        for name, feats, labels, n in (("dev", self.dev, self.dev_labels, s.n_dev), ("test", self.test, self.test_labels, s.n_test)):
            if tuple(sorted(feats)) != CONDITIONS_ORDER:
                raise CorpusError(f"{name} split must hold conditions A-D")
            if labels.shape != (n,) or any(feats[c].shape != (n, s.dim) for c in CONDITIONS_ORDER):
                raise CorpusError(f"{name} split has the wrong shape")
            # C and D are A and B seen through the channel
            for src, dst in (("A", "C"), ("B", "D")):
                redo = self.standardize(self.corruption.channel(self.unstandardize(feats[src])))
                if not np.allclose(redo, feats[dst], rtol=0, atol=1e-9):
                    raise CorpusError(f"{name}: condition {dst} is not condition {src} through the channel")
        for name, labels, n in (("train", self.train_labels, s.n_train), ("dev", self.dev_labels, s.n_dev), ("test", self.test_labels, s.n_test)):
            if labels.min() < 0 or labels.max() >= s.n_classes:
                raise CorpusError(f"{name} labels out of range")
            counts = np.bincount(labels, minlength=s.n_classes)
            if np.any(np.abs(counts - n / s.n_classes) > 0.1 * n / s.n_classes + 1):
                raise CorpusError(f"{name} labels are unbalanced")
        arrays = [self.train_clean, self.train_noisy, *self.dev.values(), *self.test.values()]
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise CorpusError("non-finite features")


def _balanced_labels(n: int, n_classes: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(np.arange(n) % n_classes)


def generate_corpus(spec: CorpusSpec) -> ConditionCorpus:
    """Build the whole corpus; a pure function of ``spec`` (seed included)."""
    spec.validate()
    rng = substream(spec.seed, "corpus")
    d, c = spec.dim, spec.n_classes

    directions = rng.standard_normal((c, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    means = spec.separation * np.sqrt(2.0) * spec.within_std * directions

    mix = rng.standard_normal((d, d))
    w = np.eye(d) + spec.channel_scale * mix / np.sqrt(d)
    b = spec.channel_bias * rng.standard_normal(d)
    if spec.noise_profile == "flat":
        profile = np.ones(d)
    else:
        profile = np.exp(-np.arange(d) / spec.noise_decay)
        profile *= np.sqrt(d / np.sum(profile**2))
    corruption = Corruption(w, b, profile, spec.noise_std, spec.noise_group)

    def draw_clean(n):
        labels = _balanced_labels(n, c, rng)
        return means[labels] + spec.within_std * rng.standard_normal((n, d)), labels

    x_train, y_train = draw_clean(spec.n_train)
    x_noisy = corruption.noise(x_train, rng, spec.clean_fraction)
    if spec.label_noise > 0:
        picked = np.flatnonzero(rng.random(spec.n_train) < spec.label_noise)
        y_train = y_train.copy()
        y_train[picked] = y_train[rng.permutation(picked)]

    def conditions(n):
        x, labels = draw_clean(n)
        noisy = corruption.noise(x, rng)
        return {"A": x, "B": noisy, "C": corruption.channel(x), "D": corruption.channel(noisy)}, labels

    dev_raw, y_dev = conditions(spec.n_dev)
    test_raw, y_test = conditions(spec.n_test)

    mu = x_noisy.mean(axis=0)
    sd = x_noisy.std(axis=0)
    std = lambda a: (a - mu) / sd  # noqa: E731
    corpus = ConditionCorpus(
        spec=spec,
        train_clean=std(x_train),
        train_noisy=std(x_noisy),
        train_labels=y_train,
        dev={k: std(v) for k, v in dev_raw.items()},
        dev_labels=y_dev,
        test={k: std(v) for k, v in test_raw.items()},
        test_labels=y_test,
        corruption=corruption,
        norm_mean=mu,
        norm_std=sd,
        class_means=means,
    )
    corpus.validate()
    return corpus


def save_corpus(path, corpus: ConditionCorpus) -> Path:
    arrays = {
        "train_clean": corpus.train_clean,
        "train_noisy": corpus.train_noisy,
        "train_labels": corpus.train_labels,
        "dev_labels": corpus.dev_labels,
        "test_labels": corpus.test_labels,
        "channel_matrix": corpus.corruption.channel_matrix,
        "channel_offset": corpus.corruption.channel_offset,
        "noise_profile": corpus.corruption.noise_profile,
        "norm_mean": corpus.norm_mean,
        "norm_std": corpus.norm_std,
        "class_means": corpus.class_means,
    }
    for c in CONDITIONS_ORDER:
        arrays[f"dev_{c}"] = corpus.dev[c]
        arrays[f"test_{c}"] = corpus.test[c]
    return container.save(path, KIND, VERSION, {"spec": corpus.spec.to_dict()}, arrays)


def load_corpus(path) -> ConditionCorpus:
    """Read a corpus file and check its invariants; corrupt files raise."""
    meta, a = container.load(path, KIND, VERSION)
    try:
        spec = CorpusSpec.from_dict(meta["spec"])
        corruption = Corruption(a["channel_matrix"], a["channel_offset"], a["noise_profile"], spec.noise_std, spec.noise_group)
        corpus = ConditionCorpus(
            spec=spec,
            train_clean=a["train_clean"],
            train_noisy=a["train_noisy"],
            train_labels=a["train_labels"],
            dev={c: a[f"dev_{c}"] for c in CONDITIONS_ORDER},
            dev_labels=a["dev_labels"],
            test={c: a[f"test_{c}"] for c in CONDITIONS_ORDER},
            test_labels=a["test_labels"],
            corruption=corruption,
            norm_mean=a["norm_mean"],
            norm_std=a["norm_std"],
            class_means=a["class_means"],
        )
    except (KeyError, TypeError) as exc:
        raise container.FormatError(f"corpus file is missing data: {exc}") from None
    corpus.validate()
    return corpus
