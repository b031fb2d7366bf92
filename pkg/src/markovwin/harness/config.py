"""Experiment configuration and model construction from config entries.

A config is a JSON object::

    {
      "schema": "markovwin.experiment/1",
      "models": [{"id": "cyc", "kind": "cycle", "bits": "0110"}, ...],
      "ells": [1, 2, 3],
      "horizons": [8],
      "mode": "exact",
      "seed": 0,
      ...
    }

Model kinds and their fields:

* ``hmm``: ``path`` to a model file, or inline ``transition``/``emission``/``initial``
* ``cycle``: ``bits``, or ``n``, ``window`` and ``seed`` for a random string
  with distinct cyclic windows
* ``permutation``: ``eps`` and either ``labels`` or ``n`` plus ``seed``
* ``random_hmm``: ``n``, ``d``, ``seed`` and optional ``concentration``;
  the initial law is set to the stationary one
* ``iid``: ``probs``
* ``parity``: ``n``, ``m``, ``eta``, ``noise`` and ``A`` (0/1 row strings) or ``seed``
* ``csp``: ``n``, ``k``, ``m``, ``eta``, ``distance`` and optional ``sigma``, ``seed``
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..codes import BinaryMatrix, search_code
from ..constructions import (
    CspModelSpec,
    ParityModelSpec,
    PermutationLabelSpec,
    build_cycle_hmm,
    build_permutation_hmm,
    compile_csp_to_hmm,
    compile_parity_to_hmm,
    random_cycle_bits,
    sample_full_row_rank_matrix,
)
from ..enumeration import DEFAULT_BUDGET
from ..errors import InvalidModelError
from ..hmm import Hmm, load_hmm, stationary_distribution, validate
from ..seeding import derive_seed

SCHEMA = "markovwin.experiment/1"
MODES = ("exact", "mc")


class ConfigError(ValueError):
    pass


@dataclass
class ModelEntry:
    """A built model: the HMM (when there is one) and the block spec for block models."""

    id: str
    kind: str
    hmm: Hmm | None
    spec: object = None
    formulation: str = "stationary"


@dataclass
class ExperimentConfig:
    models: list
    ells: list = field(default_factory=lambda: [1, 2, 3])
    horizons: list = field(default_factory=lambda: [8])
    trials: int = 100
    mode: str = "exact"
    seed: int = 0
    out: str | None = None
    budget: int = DEFAULT_BUDGET
    train_length: int = 10_000
    eval_times: int = 100
    alpha: float = 0.0
    samples: int = 20
    etas: list | None = None
    plot: bool = False
    base_dir: str = "."

    def __post_init__(self):
        for name in ("ells", "horizons"):
            vals = getattr(self, name)
            if not vals or any(not isinstance(v, int) or v <= 0 for v in vals):
                raise ConfigError(f"{name} must be a nonempty list of positive integers")
        for name in ("trials", "budget", "train_length", "eval_times", "samples"):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.models:
            raise ConfigError("config lists no models")
        ids = [m.get("id") for m in self.models]
        if any(not isinstance(i, str) or not i for i in ids) or len(set(ids)) != len(ids):
            raise ConfigError("every model needs a distinct nonempty string id")

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str = ".") -> "ExperimentConfig":
        if doc.get("schema") != SCHEMA:
            raise ConfigError(f"schema must be {SCHEMA!r}, got {doc.get('schema')!r}")
        known = set(cls.__dataclass_fields__) - {"base_dir"}
        extra = set(doc) - known - {"schema"}
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        kwargs = {k: v for k, v in doc.items() if k in known}
        try:
            return cls(base_dir=base_dir, **kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        p = Path(path)
        try:
            doc = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc, base_dir=str(p.parent))


def _require(doc, *names):
    missing = [n for n in names if n not in doc]
    if missing:
        raise ConfigError(f"model {doc.get('id')!r} is missing {missing}")


def random_hmm(n: int, d: int, seed: int, concentration: float = 1.0) -> Hmm:
    """Dirichlet rows; the initial law is the stationary distribution."""
    rng = np.random.default_rng(seed)
    T = rng.dirichlet(np.full(n, concentration), size=n)
    E = rng.dirichlet(np.full(d, concentration), size=n)
    h = Hmm(T, E, np.full(n, 1.0 / n))
    return h.with_initial(stationary_distribution(h))


def _seed(doc, master, index):
    return int(doc["seed"]) if "seed" in doc else derive_seed(master, index)


def build_model(doc: dict, master_seed: int = 0, index: int = 0, base_dir: str = ".", budget=DEFAULT_BUDGET) -> ModelEntry:
    """Turn one ``models`` entry into a :class:`ModelEntry`."""
    kind = doc.get("kind")
    mid = doc.get("id", f"model{index}")
    try:
        if kind == "hmm":
            if "path" in doc:
                h = load_hmm(Path(base_dir) / doc["path"])
            else:
                _require(doc, "transition", "emission", "initial")
                h = Hmm(doc["transition"], doc["emission"], doc["initial"])
            return ModelEntry(mid, kind, h)
        if kind == "cycle":
            if "bits" in doc:
                bits = [int(c) for c in str(doc["bits"])]
            else:
                _require(doc, "n", "window")
                bits = random_cycle_bits(int(doc["n"]), int(doc["window"]), _seed(doc, master_seed, index))
            return ModelEntry(mid, kind, build_cycle_hmm(bits))
        if kind == "permutation":
            _require(doc, "eps")
            if "labels" in doc:
                spec = PermutationLabelSpec(tuple(int(c) for c in str(doc["labels"])), float(doc["eps"]))
            else:
                _require(doc, "n")
                spec = PermutationLabelSpec.random(int(doc["n"]), float(doc["eps"]), _seed(doc, master_seed, index))
            return ModelEntry(mid, kind, build_permutation_hmm(spec), spec)
        if kind == "random_hmm":
            _require(doc, "n", "d")
            h = random_hmm(int(doc["n"]), int(doc["d"]), _seed(doc, master_seed, index), float(doc.get("concentration", 1.0)))
            return ModelEntry(mid, kind, h)
        if kind == "iid":
            _require(doc, "probs")
            p = np.asarray(doc["probs"], dtype=float)
            h = Hmm([[1.0]], [p], [1.0])
            return ModelEntry(mid, kind, h)
        if kind == "parity":
            _require(doc, "n", "m")
            n, m = int(doc["n"]), int(doc["m"])
            if "A" in doc:
                A = BinaryMatrix([[int(c) for c in row] for row in doc["A"]])
            else:
                A, _ = sample_full_row_rank_matrix(m, n, _seed(doc, master_seed, index))
            spec = ParityModelSpec(n, m, A, float(doc.get("eta", 0.0)), doc.get("noise", "bitwise"))
            h = compile_parity_to_hmm(spec, budget=None)
            return ModelEntry(mid, kind, h, spec, formulation="window")
        if kind == "csp":
            _require(doc, "n", "k", "m")
            n, k, m = int(doc["n"]), int(doc["k"]), int(doc["m"])
            seed = _seed(doc, master_seed, index)
            dist = int(doc.get("distance", 2))
            found = search_code(k, m, dist, int(doc.get("search_budget", 1000)), seed)
            rng = np.random.default_rng(derive_seed(seed, 1))
            sigma = tuple(int(c) for c in str(doc["sigma"])) if "sigma" in doc else tuple(rng.integers(0, 2, size=n))
            spec = CspModelSpec(n, k, found.A, sigma, float(doc.get("eta", 0.0)), t=dist - 1)
            h = compile_csp_to_hmm(spec, budget=None)
            return ModelEntry(mid, kind, h, spec, formulation="window")
    except (ValueError, KeyError, InvalidModelError, RuntimeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"model {mid!r}: {exc}") from exc
    raise ConfigError(f"model {mid!r} has unknown kind {kind!r}")


def build_models(cfg: ExperimentConfig) -> list[ModelEntry]:
    out = []
    for i, doc in enumerate(cfg.models):
        entry = build_model(doc, cfg.seed, i, cfg.base_dir, cfg.budget)
        if "formulation" in doc:
            if doc["formulation"] not in ("stationary", "window"):
                raise ConfigError(f"model {entry.id!r}: formulation must be 'stationary' or 'window'")
            entry.formulation = doc["formulation"]
        if entry.hmm is not None:
            res = validate(entry.hmm)
            if not res.ok:
                raise ConfigError(f"model {entry.id!r} is invalid: {'; '.join(res.problems)}")
        out.append(entry)
    return out
