"""Pipeline configuration.

One TOML file describes a whole run; command-line ``--set section.key=value``
overrides win over the file. All randomized stages draw their seeds from
the single root seed through stable stage labels, so one integer reproduces
an entire run. The resolved configuration is echoed into the workdir next
to the report.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, Optional

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .evaluation import EvalConfig
from .log_ingest import DEFAULT_ASSET_SUFFIXES, CleaningConfig
from .synth_workbench import SynthConfig

_DEFAULTS: Dict[str, object] = {
    "seed": 42,
    "threads": 1,
    "k": 17,
    "recommend_n": 10,
    "strict_parse": False,
    "paths": {
        "workdir": "",
        "log": "",       # empty: <workdir>/synth.log
        "catalog": "",   # empty: <workdir>/catalog.tsv
        "registry": "",  # empty: the packaged default registry
    },
    "cleaning": {
        "asset_suffixes": sorted(DEFAULT_ASSET_SUFFIXES),
        "success_status": [200, 299],
    },
    "mining": {
        "min_support": 0.01,
        "min_confidence": 0.8,
        "max_itemset_size": 6,
        "single_consequent": False,
        "per_user": False,
    },
    "partition": {
        "k": 0,  # 0: inherit the top-level k
        "epsilon": 0.1,
        "restarts": 8,
        "max_passes": 10,
        "weight_mode": "mean",
    },
    "clustering": {
        "k": 0,
        "kmeans_max_iter": 100,
        "em_max_iter": 100,
        "em_reg": 1e-6,
        "em_svd_dims": 32,
        "dbscan_eps": 0.9,
        "dbscan_min_pts": 3,
        "hier_linkage": "average",
    },
    "eval": {
        "min_doc_views": 10,
        "min_profile_items": 15,
        "k_clusters": 0,
        "best_of_metric": "f1",
        "independent_maxima": False,
    },
    "synth": {
        "n_users": 400,
        "n_docs": 300,
        "n_communities": 17,
        "sessions_per_user": 8.0,
        "session_len": 6.0,
        "in_community_prob": 0.9,
        "title_vocab_mode": "aligned",
        "failure_rate": 0.05,
    },
}


@dataclass(frozen=True)
class MiningSettings:
    min_support: float
    min_confidence: float
    max_itemset_size: int
    single_consequent: bool
    per_user: bool


@dataclass(frozen=True)
class PartitionSettings:
    k: int
    epsilon: float
    restarts: int
    max_passes: int
    weight_mode: str


@dataclass(frozen=True)
class ClusteringSettings:
    k: int
    kmeans_max_iter: int
    em_max_iter: int
    em_reg: float
    em_svd_dims: int
    dbscan_eps: float
    dbscan_min_pts: int
    hier_linkage: str


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    threads: int
    k: int
    recommend_n: int
    strict_parse: bool
    workdir: str
    log: str
    catalog: str
    registry: str
    cleaning: CleaningConfig
    mining: MiningSettings
    partition: PartitionSettings
    clustering: ClusteringSettings
    eval: EvalConfig
    synth: SynthConfig
    raw: tuple  # canonical (key, value-json) pairs for echoing


def stage_seed(root_seed: int, label: str) -> int:
    """Stable per-stage seed derivation from the root seed."""
    digest = hashlib.sha256(f"{root_seed}:{label}".encode()).hexdigest()
    return int(digest[:8], 16)


def _merge(defaults: dict, given: dict, trail: str = "") -> dict:
    merged = {}
    for key, default in defaults.items():
        if key in given:
            value = given[key]
            if isinstance(default, dict):
                if not isinstance(value, dict):
                    raise ConfigError(f"{trail}{key} must be a table")
                merged[key] = _merge(default, value, f"{trail}{key}.")
            else:
                merged[key] = value
        else:
            merged[key] = default if not isinstance(default, dict) \
                else _merge(default, {}, f"{trail}{key}.")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(
            f"unknown config key(s): {', '.join(sorted(trail + u for u in unknown))}")
    return merged


def _parse_override_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text  # bare string


def _apply_overrides(tree: dict, overrides: Dict[str, str]) -> None:
    for dotted, raw_value in overrides.items():
        node = tree
        parts = dotted.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config section {dotted!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        node[parts[-1]] = _parse_override_value(raw_value)


def packaged_config_path(name: str) -> Path:
    """Path of a configuration file shipped inside the package."""
    ref = resources.files("hyperlens.data").joinpath(f"{name}.toml")
    with resources.as_file(ref) as path:
        if not path.exists():
            raise ConfigError(f"no packaged config named {name!r}")
        return Path(path)


def default_registry_path() -> Path:
    ref = resources.files("hyperlens.data").joinpath("registry.json")
    with resources.as_file(ref) as path:
        return Path(path)


def load_config(path: Optional[str] = None,
                overrides: Optional[Dict[str, str]] = None) -> PipelineConfig:
    """Build the typed configuration from an optional TOML file plus
    dotted-key overrides. ``path`` may name a packaged config (``study``)."""
    given: dict = {}
    if path:
        file_path = Path(path)
        if not file_path.exists() and "/" not in str(path) and not str(path).endswith(".toml"):
            file_path = packaged_config_path(str(path))
        try:
            with open(file_path, "rb") as fh:
                given = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad TOML in {path}: {exc}")
    tree = _merge(_DEFAULTS, given)
    if overrides:
        _apply_overrides(tree, overrides)
    return _build(tree)


def _build(tree: dict) -> PipelineConfig:
    top_k = int(tree["k"])
    if top_k < 2:
        raise ConfigError(f"k must be >= 2, got {top_k}")

    def inherit_k(value) -> int:
        value = int(value)
        return top_k if value == 0 else value

    cleaning_tree = tree["cleaning"]
    try:
        cleaning = CleaningConfig(
            asset_suffixes=frozenset(cleaning_tree["asset_suffixes"]),
            success_status_range=tuple(cleaning_tree["success_status"]))
    except ValueError as exc:
        raise ConfigError(str(exc))

    mining = MiningSettings(
        min_support=float(tree["mining"]["min_support"]),
        min_confidence=float(tree["mining"]["min_confidence"]),
        max_itemset_size=int(tree["mining"]["max_itemset_size"]),
        single_consequent=bool(tree["mining"]["single_consequent"]),
        per_user=bool(tree["mining"]["per_user"]))
    if not 0 < mining.min_support <= 1:
        raise ConfigError("mining.min_support must be in (0, 1]")
    if not 0 <= mining.min_confidence <= 1:
        raise ConfigError("mining.min_confidence must be in [0, 1]")

    partition = PartitionSettings(
        k=inherit_k(tree["partition"]["k"]),
        epsilon=float(tree["partition"]["epsilon"]),
        restarts=int(tree["partition"]["restarts"]),
        max_passes=int(tree["partition"]["max_passes"]),
        weight_mode=str(tree["partition"]["weight_mode"]))
    if partition.weight_mode not in ("mean", "sum", "count"):
        raise ConfigError(f"bad partition.weight_mode {partition.weight_mode!r}")

    clustering = ClusteringSettings(
        k=inherit_k(tree["clustering"]["k"]),
        kmeans_max_iter=int(tree["clustering"]["kmeans_max_iter"]),
        em_max_iter=int(tree["clustering"]["em_max_iter"]),
        em_reg=float(tree["clustering"]["em_reg"]),
        em_svd_dims=int(tree["clustering"]["em_svd_dims"]),
        dbscan_eps=float(tree["clustering"]["dbscan_eps"]),
        dbscan_min_pts=int(tree["clustering"]["dbscan_min_pts"]),
        hier_linkage=str(tree["clustering"]["hier_linkage"]))
    if clustering.hier_linkage not in ("single", "complete", "average"):
        raise ConfigError(f"bad clustering.hier_linkage {clustering.hier_linkage!r}")

    try:
        eval_cfg = EvalConfig(
            min_doc_views=int(tree["eval"]["min_doc_views"]),
            min_profile_items=int(tree["eval"]["min_profile_items"]),
            k_clusters=inherit_k(tree["eval"]["k_clusters"]),
            best_of_metric=str(tree["eval"]["best_of_metric"]),
            independent_maxima=bool(tree["eval"]["independent_maxima"]))
    except ValueError as exc:
        raise ConfigError(str(exc))

    seed = int(tree["seed"])
    synth = SynthConfig(
        n_users=int(tree["synth"]["n_users"]),
        n_docs=int(tree["synth"]["n_docs"]),
        n_communities=int(tree["synth"]["n_communities"]),
        sessions_per_user=float(tree["synth"]["sessions_per_user"]),
        session_len=float(tree["synth"]["session_len"]),
        in_community_prob=float(tree["synth"]["in_community_prob"]),
        title_vocab_mode=str(tree["synth"]["title_vocab_mode"]),
        seed=stage_seed(seed, "synth"),
        failure_rate=float(tree["synth"]["failure_rate"]))

    raw = _flatten(tree)
    return PipelineConfig(
        seed=seed,
        threads=int(tree["threads"]),
        k=top_k,
        recommend_n=int(tree["recommend_n"]),
        strict_parse=bool(tree["strict_parse"]),
        workdir=str(tree["paths"]["workdir"]),
        log=str(tree["paths"]["log"]),
        catalog=str(tree["paths"]["catalog"]),
        registry=str(tree["paths"]["registry"]),
        cleaning=cleaning, mining=mining, partition=partition,
        clustering=clustering, eval=eval_cfg, synth=synth, raw=raw)


def _flatten(tree: dict, prefix: str = "") -> tuple:
    items = []
    for key in sorted(tree):
        value = tree[key]
        if isinstance(value, dict):
            items.extend(_flatten(value, f"{prefix}{key}."))
        else:
            items.append((f"{prefix}{key}", json.dumps(value)))
    return tuple(items)


def render_config(cfg: PipelineConfig) -> str:
    """Canonical flat ``key = value`` echo of the resolved configuration."""
    return "".join(f"{key} = {value}\n" for key, value in cfg.raw)
