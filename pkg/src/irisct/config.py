"""Run configuration: every tunable of the pipeline in one flat record.

Config files are plain ``key = value`` lines; ``#`` starts a comment.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .gaselect import GAParams
from .segment import SegmentConfig

__all__ = ["RunConfig", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    # segmentation
    r_min: float = 15.0
    r_max: float = 130.0
    id_sigma: float = 1.5
    id_floor: float = 4.0
    collarette_fraction: float = 0.5
    hough_vote_floor: int = 40
    eyelid_margin: float = 2.0
    gabor_threshold: float = 75.0
    variance_threshold: float = 6.0
    eyelash_window: int = 5
    # normalization
    radial_res: int = 20
    angular_res: int = 240
    # features
    nlac_percent: float = 2.5
    projection_k: int = 1100
    # GA
    ga_pop: int = 108
    ga_gene_len: int = 600
    ga_crossover: float = 0.65
    ga_mutation: float = 0.002
    ga_generations: int = 110
    ga_w_err: float = 0.9
    ga_w_count: float = 0.1
    ga_elitism: int = 1
    ga_train_fraction: float = 0.7
    ga_classifier: str = "centroid"
    # matching
    binary_threshold: float = 0.42
    cascade_lo: float = 0.30
    cascade_hi: float = 0.50
    svm_c: float = 1.0
    svm_kernel: str = "linear"
    seed: int = 0

    def segment_config(self) -> SegmentConfig:
        keys = {f.name for f in fields(SegmentConfig)}
        return SegmentConfig(**{k: v for k, v in asdict(self).items() if k in keys})

    def ga_params(self, seed: int | None = None) -> GAParams:
        return GAParams(
            pop_size=self.ga_pop, gene_len=self.ga_gene_len, p_crossover=self.ga_crossover,
            p_mutation=self.ga_mutation, n_generations=self.ga_generations,
            weights=(self.ga_w_err, self.ga_w_count), elitism=self.ga_elitism,
            train_fraction=self.ga_train_fraction,
            rng_seed=self.seed if seed is None else seed,
        )

    def updated(self, **overrides) -> "RunConfig":
        known = {f.name: f.type for f in fields(self)}
        clean = {}
        for key, value in overrides.items():
            if key not in known:
                raise KeyError(f"unknown config key {key!r}")
            clean[key] = _coerce(getattr(self, key), value)
        return replace(self, **clean)

    def dump(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in asdict(self).items())


def _coerce(default, value):
    if isinstance(value, str):
        if isinstance(default, bool):
            return value.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return value.strip()
    return type(default)(value)


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    overrides = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        overrides[key] = value
    return (base or RunConfig()).updated(**overrides)
