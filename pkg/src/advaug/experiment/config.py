"""Experiment configuration: a JSON file, CLI overrides, and a resolved form.

Documented keys (all optional except where a recipe needs them)::

    corpus          corpus spec keys (see ``advaug.corpus.CorpusSpec``)
    corpus_file     path to a saved corpus; when set it wins over ``corpus``
    network         {"hidden": [32, 32], "activation": "relu"}
    train           TrainConfig keys except epsilon/origin/shuffle_seed
    ts              {"alpha": 0.5, "fgsm_loss": "combined"}
    recipe          baseline | advex | random | ts | ts-advex | ts-random
    epsilon         perturbation weight for the adversarial recipes
    sweep_epsilons  list used by the sweep command
    seeds           list of run seeds
    teacher_checkpoint  optional teacher for the ts recipes
    out             output directory (or file for gen-data)

The resolved config has every key filled in and is what gets written next
to the results, so a run can be repeated from its own output directory.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

from ..corpus import CorpusError, CorpusSpec
from ..distill import TsConfig
from ..training import TrainConfig

FORMAT = "ADVAUG-CONFIG v1"
RECIPES = ("baseline", "advex", "random", "ts", "ts-advex", "ts-random")
DEFAULT_SWEEP = [0.05, 0.1, 0.2, 0.3, 0.5, 0.8]
REFERENCE = Path(__file__).resolve().parent.parent / "configs" / "reference.json"

DEFAULTS = {
    "format": FORMAT,
    "corpus": {},
    "corpus_file": None,
    "network": {"hidden": [32, 32], "activation": "relu"},
    "train": {"epochs": 30, "batch_size": 64, "optimizer": "adam", "lr": 0.001, "patience": None},
    "ts": {"alpha": 0.5, "fgsm_loss": "combined"},
    "recipe": "baseline",
    "epsilon": None,
    "sweep_epsilons": DEFAULT_SWEEP,
    "seeds": [0],
    "teacher_checkpoint": None,
    "out": None,
}


class ConfigError(ValueError):
    """Bad config file, bad override or a recipe missing a required field."""


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if k not in base:
            raise ConfigError(f"unknown config key {k!r}")
        if isinstance(base[k], dict) and k != "corpus":
            if not isinstance(v, dict):
                raise ConfigError(f"{k} must be an object")
            unknown = set(v) - set(base[k])
            if unknown:
                raise ConfigError(f"unknown {k} keys: {sorted(unknown)}")
            out[k].update(v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults, then the file at ``path``, then ``overrides``; validated."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data.pop("format", None)
        cfg = _merge(cfg, data)
    if overrides:
        cfg = _merge(cfg, overrides)
    return resolve(cfg)


def resolve(cfg: dict) -> dict:
    """Fill derived defaults and check every field; returns a new dict."""
    cfg = copy.deepcopy(cfg)
    if cfg["recipe"] not in RECIPES:
        raise ConfigError(f"recipe must be one of {RECIPES}, got {cfg['recipe']!r}")
    try:
        cfg["corpus"] = CorpusSpec.from_dict(cfg["corpus"]).to_dict()
    except (CorpusError, TypeError) as exc:
        raise ConfigError(f"corpus: {exc}") from None
    seeds = cfg["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in seeds):
        raise ConfigError("seeds must be a nonempty list of nonnegative integers")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct")
    net = cfg["network"]
    if not all(isinstance(h, int) and h > 0 for h in net["hidden"]):
        raise ConfigError("network.hidden must list positive widths")
    if net["activation"] not in ("relu", "tanh"):
        raise ConfigError("network.activation must be relu or tanh")
    eps = cfg["epsilon"]
    if cfg["recipe"] in ("advex", "random", "ts-advex", "ts-random") and eps is None:
        raise ConfigError(f"recipe {cfg['recipe']} needs epsilon")
    sweep = cfg["sweep_epsilons"]
    if not isinstance(sweep, list) or not sweep:
        raise ConfigError("sweep_epsilons must be a nonempty list")
    try:
        for e in ([eps] if eps is not None else []) + sweep:
            if isinstance(e, bool) or not isinstance(e, (int, float)) or not e >= 0:
                raise ConfigError(f"epsilon values must be nonnegative numbers, got {e!r}")
        train_config(cfg, seed=0)
        ts_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg["sweep_epsilons"] = [float(e) for e in sweep]
    cfg["epsilon"] = None if eps is None else float(eps)
    cfg["format"] = FORMAT
    return cfg


def train_config(cfg: dict, seed: int, epsilon: float | None = None, origin: str = "fgsm") -> TrainConfig:
    return TrainConfig(**cfg["train"], epsilon=epsilon, origin=origin, shuffle_seed=seed)


def ts_config(cfg: dict) -> TsConfig:
    return TsConfig(**cfg["ts"])


def dump_config(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"
