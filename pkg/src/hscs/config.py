"""Pipeline configuration and its canonical text dump."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path


@dataclass(frozen=True)
class PipelineConfig:
    n_superpixels: int = 400
    k_seeds: int = 40
    keep_ratio: float = 0.8
    k_clusters: int = 5
    xi: float = 0.01
    sigma2: float = 0.1
    sigma2_recon: float = 0.1
    beta2: float = 0.3
    top_fg: int = 20
    rng_seed: int = 0
    compactness: float = 10.0
    smooth_weight: float = 1.0
    holistic_weight: float = 1.0
    require_intra: bool = False
    invert_depth: bool = False
    dump_superpixels: bool = False
    dump_seeds: bool = False
    dump_inter: bool = False
    dump_energy: bool = False
    dump_features: bool = False
    # field name -> "default" | "config" | "flag"
    provenance: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for name in ("n_superpixels", "k_seeds", "k_clusters", "sigma2",
                     "sigma2_recon", "beta2", "top_fg"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.xi < 0 or self.smooth_weight < 0 or self.holistic_weight < 0:
            raise ValueError("xi and energy weights must be >= 0")
        if not 0 < self.keep_ratio <= 1:
            raise ValueError("keep_ratio must lie in (0, 1]")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be >= 0")

    def source(self, name: str) -> str:
        return self.provenance.get(name, "default")

    def override(self, values: dict, source: str) -> "PipelineConfig":
        if not values:
            return self
        unknown = set(values) - set(config_fields())
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        prov = dict(self.provenance)
        prov.update({k: source for k in values})
        return replace(self, provenance=prov, **values)


def config_fields() -> list[str]:
    return [f.name for f in fields(PipelineConfig) if f.name != "provenance"]


def print_config(cfg: PipelineConfig) -> str:
    """One ``name = <json value>  # <source>`` line per field."""
    names = config_fields()
    width = max(len(n) for n in names)
    lines = []
    for name in names:
        value = json.dumps(getattr(cfg, name))
        lines.append(f"{name.ljust(width)} = {value}  # {cfg.source(name)}")
    return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'name = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = json.loads(value)
    return values


def load_config_file(path, base: PipelineConfig | None = None) -> PipelineConfig:
    base = base or PipelineConfig()
    return base.override(parse_config_text(Path(path).read_text()), "config")
