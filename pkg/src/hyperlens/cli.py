"""Pipeline orchestration.

Each subcommand reads the previous stage's artifacts from the workdir and
writes its own atomically; ``run-all`` executes the whole chain in order,
so its artifacts are byte-identical to running the stages by hand.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import click

from . import artifacts as art
from . import content_clustering as cc
from . import evaluation as ev
from . import hypergraph_partition as hp
from . import log_ingest, rule_mining, session_builder, synth_workbench, text_index
from .config import (PipelineConfig, default_registry_path, load_config,
                     render_config, stage_seed)
from .errors import ConfigError, HyperlensError, MissingArtifact
from .report import (REPORT_ALGORITHMS, ReportRow, render_f1_distribution_figure,
                     render_report, render_score_figure)

logger = logging.getLogger(__name__)

# CLI algorithm keys and their report row labels.
ALGO_LABELS = {
    "em": "EM",
    "filtered": "Filtered",
    "kmeans": "K-Mean",
    "farthest_first": "FarthestFirst",
    "dbscan": "Density",
    "hierarchical": "Hierarchical",
    "hypergraph": "Hypergraph",
}
CONTENT_ALGOS = ("em", "filtered", "kmeans", "farthest_first", "dbscan",
                 "hierarchical")
LABEL_TO_ALGO = {label: algo for algo, label in ALGO_LABELS.items()}

_EXIT_CODES = {"config": 2, "missing-artifact": 3}


@dataclass
class Runtime:
    cfg: PipelineConfig
    workdir: Path

    def path(self, name: str) -> Path:
        return self.workdir / name

    def log_path(self) -> Path:
        return Path(self.cfg.log) if self.cfg.log else self.path(art.LOG)

    def catalog_path(self) -> Path:
        return Path(self.cfg.catalog) if self.cfg.catalog else self.path(art.CATALOG)

    def registry_path(self) -> Path:
        return Path(self.cfg.registry) if self.cfg.registry else default_registry_path()

    def echo_config(self) -> None:
        art.atomic_write(self.path(art.CONFIG_USED), render_config(self.cfg))


def _resolve_runtime(config: Optional[str], workdir: Optional[str],
                     overrides: tuple, seed: Optional[int],
                     threads: Optional[int]) -> Runtime:
    parsed: Dict[str, str] = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        parsed[key.strip()] = value.strip()
    if seed is not None:
        parsed["seed"] = str(seed)
    if threads is not None:
        parsed["threads"] = str(threads)
    cfg = load_config(config, parsed)
    chosen = workdir or cfg.workdir or "hyperlens-work"
    return Runtime(cfg=cfg, workdir=Path(chosen))


# ---------------------------------------------------------------------------
# Stage implementations


def stage_synth(rt: Runtime) -> None:
    result = synth_workbench.generate(rt.cfg.synth)
    art.atomic_write(rt.log_path(), result.log_text)
    art.atomic_write(rt.catalog_path(),
                     session_builder.render_catalog(result.catalog))
    art.atomic_write(rt.path(art.GROUND_TRUTH), result.truth.to_json())


def stage_parse(rt: Runtime) -> None:
    log_path = art.require(rt.log_path(), "run `synth` or point paths.log at a log file")
    _, report = log_ingest.read_log(log_path, strict=rt.cfg.strict_parse)
    art.atomic_write(rt.path(art.PARSE_REPORT), report.to_json())


def stage_clean(rt: Runtime) -> None:
    log_path = art.require(rt.log_path(), "run `synth` or point paths.log at a log file")
    entries, parse_report = log_ingest.read_log(log_path, strict=rt.cfg.strict_parse)
    kept, report = log_ingest.clean_log(entries, rt.cfg.cleaning)
    art.atomic_write(rt.path(art.PARSE_REPORT), parse_report.to_json())
    art.atomic_write(rt.path(art.CLEANED_LOG), log_ingest.render_log(kept))
    art.atomic_write(rt.path(art.CLEANING_REPORT), report.to_json())


def stage_sessions(rt: Runtime) -> None:
    cleaned = art.require(rt.path(art.CLEANED_LOG), "run `clean` first")
    entries, _ = log_ingest.read_log(cleaned, strict=True)
    registry = session_builder.load_registry(rt.registry_path())
    catalog_path = rt.catalog_path()
    catalog = session_builder.load_catalog(catalog_path) if catalog_path.exists() else None
    sessions, report = session_builder.build_sessions(entries, registry, catalog)
    art.atomic_write(rt.path(art.SESSIONS),
                     session_builder.sessions_to_jsonl(sessions))
    art.atomic_write(rt.path(art.SESSION_REPORT), report.to_json())


def _load_sessions(rt: Runtime) -> List[session_builder.Session]:
    path = art.require(rt.path(art.SESSIONS), "run `sessions` first")
    return session_builder.sessions_from_jsonl(path.read_text("utf-8"))


def _load_universe(rt: Runtime) -> Dict[str, int]:
    path = art.require(rt.path(art.UNIVERSE), "run `tfidf` first")
    counts = {}
    for line in path.read_text("utf-8").splitlines():
        if line.strip():
            doc, views = line.split("\t")
            counts[doc] = int(views)
    return counts


def stage_tfidf(rt: Runtime) -> None:
    sessions = _load_sessions(rt)
    universe = ev.select_top_documents(sessions, rt.cfg.eval)
    views = ev.doc_view_counts(sessions)
    art.atomic_write(rt.path(art.UNIVERSE), "".join(
        f"{doc}\t{views[doc]}\n" for doc in sorted(universe)))

    catalog_path = rt.catalog_path()
    catalog = session_builder.load_catalog(catalog_path) if catalog_path.exists() else {}
    missing_titles = sum(1 for doc in universe if doc not in catalog)
    if missing_titles:
        logger.warning("%d universe docs have no catalog title", missing_titles)
    stopwords = text_index.default_stopwords()
    docs = [text_index.make_title_doc(doc, catalog.get(doc, ""), stopwords)
            for doc in sorted(universe)]
    dictionary = text_index.build_dictionary(docs)
    matrix = text_index.build_matrix(docs, dictionary, normalize=True)
    art.atomic_write(rt.path(art.DICTIONARY),
                     text_index.render_dictionary(dictionary))
    art.atomic_write(rt.path(art.MATRIX), text_index.render_matrix(matrix))


def stage_mine(rt: Runtime) -> None:
    sessions = _load_sessions(rt)
    universe = set(_load_universe(rt))
    settings = rt.cfg.mining
    transactions, dropped = rule_mining.build_transactions(
        sessions, restrict_to=universe, per_user=settings.per_user)
    frequent = rule_mining.mine_frequent_itemsets(
        transactions, settings.min_support, max_size=settings.max_itemset_size)
    rules = rule_mining.generate_rules(
        frequent, settings.min_confidence,
        single_consequent=settings.single_consequent)
    art.atomic_write(rt.path(art.RULES), rule_mining.render_rules(rules))
    art.atomic_write(rt.path(art.MINING_REPORT), json.dumps({
        "n_transactions": frequent.n_transactions,
        "dropped_empty_sessions": dropped,
        "n_frequent_itemsets": len(frequent.itemsets),
        "n_rules": len(rules),
    }, sort_keys=True, indent=2) + "\n")


def stage_hypergraph(rt: Runtime) -> None:
    rules_path = art.require(rt.path(art.RULES), "run `mine` first")
    rules = rule_mining.parse_rules(rules_path.read_text("utf-8"))
    hg = hp.build_hypergraph(rules, weight_mode=rt.cfg.partition.weight_mode)
    art.atomic_write(rt.path(art.HYPERGRAPH), hp.render_hypergraph(hg))
    art.atomic_write(rt.path(art.HYPERGRAPH_VERTICES), hp.render_vertex_names(hg))


def _load_hypergraph(rt: Runtime) -> hp.Hypergraph:
    hg_path = art.require(rt.path(art.HYPERGRAPH), "run `hypergraph` first")
    names_path = art.require(rt.path(art.HYPERGRAPH_VERTICES), "run `hypergraph` first")
    return hp.parse_hypergraph(hg_path.read_text("utf-8"),
                               hp.parse_vertex_names(names_path.read_text("utf-8")))


def stage_partition(rt: Runtime) -> None:
    hg = _load_hypergraph(rt)
    universe = set(_load_universe(rt))
    settings = rt.cfg.partition
    partition, report = hp.partition_k(
        hg, k=settings.k, epsilon=settings.epsilon,
        seed=stage_seed(rt.cfg.seed, "partition"),
        restarts=settings.restarts, max_passes=settings.max_passes)
    art.atomic_write(rt.path(art.PARTITION), hp.render_partition(partition))
    art.atomic_write(rt.path(art.CUT_REPORT), json.dumps({
        "cut": report.cut,
        "connectivity": report.connectivity,
        "per_part_sizes": report.per_part_sizes,
    }, sort_keys=True, indent=2) + "\n")

    doc_assignment = {doc: part
                      for doc, part in hp.to_doc_assignment(hg, partition).items()
                      if doc in universe}
    placed = hp.isolated_vertex_placement(universe, doc_assignment, settings.k)
    assignment = cc.ClusterAssignment(
        algorithm="hypergraph", labels=placed,
        k_effective=settings.k, seed=rt.cfg.seed)
    art.atomic_write(rt.path(art.clusters_artifact("hypergraph")),
                     cc.render_assignment(assignment))


def _load_matrix(rt: Runtime) -> text_index.TermDocMatrix:
    matrix_path = art.require(rt.path(art.MATRIX), "run `tfidf` first")
    universe = _load_universe(rt)
    return text_index.parse_matrix(matrix_path.read_text("utf-8"),
                                   list(universe))


def stage_cluster(rt: Runtime, algo: str) -> None:
    matrix = _load_matrix(rt)
    settings = rt.cfg.clustering
    seed = stage_seed(rt.cfg.seed, f"cluster.{algo}")
    if algo == "kmeans":
        assignment = cc.kmeans(matrix, k=settings.k, seed=seed,
                               max_iter=settings.kmeans_max_iter)
    elif algo == "filtered":
        assignment = cc.filtered_kmeans(matrix, k=settings.k, seed=seed,
                                        max_iter=settings.kmeans_max_iter)
    elif algo == "farthest_first":
        assignment = cc.farthest_first(matrix, k=settings.k, seed=seed)
    elif algo == "hierarchical":
        assignment = cc.hierarchical(matrix, k=settings.k,
                                     linkage=settings.hier_linkage)
    elif algo == "em":
        assignment = cc.em_mixture(matrix, k=settings.k, seed=seed,
                                   max_iter=settings.em_max_iter,
                                   reg=settings.em_reg,
                                   svd_dims=settings.em_svd_dims)
    elif algo == "dbscan":
        assignment = cc.dbscan(matrix, eps=settings.dbscan_eps,
                               min_pts=settings.dbscan_min_pts)
    else:
        raise ConfigError(f"unknown clustering algorithm {algo!r}")
    art.atomic_write(rt.path(art.clusters_artifact(algo)),
                     cc.render_assignment(assignment))


def stage_evaluate(rt: Runtime, out: Optional[str] = None) -> str:
    sessions = _load_sessions(rt)
    views = _load_universe(rt)
    universe = set(views)
    profiles = ev.build_profiles(sessions, rt.cfg.eval, universe)

    rows: List[ReportRow] = []
    per_user: Dict[str, List[ev.UserScore]] = {}
    for label in REPORT_ALGORITHMS:
        algo = LABEL_TO_ALGO[label]
        path = art.require(rt.path(art.clusters_artifact(algo)),
                           f"run `cluster {algo}`"
                           if algo != "hypergraph" else "run `partition`")
        assignment = cc.parse_assignment(path.read_text("utf-8"), algo)
        covered = set(assignment.labels)
        if not universe <= covered:
            missing = sorted(universe - covered)[:3]
            raise HyperlensError(
                f"{label} assignment misses universe docs (e.g. {missing})")
        mean, table = ev.evaluate_algorithm(assignment, profiles, rt.cfg.eval,
                                            threads=rt.cfg.threads)
        rows.append(ReportRow(algorithm=label, triple=mean))
        per_user[label] = table

    report_text = render_report(rows)
    art.atomic_write(rt.path(art.REPORT), report_text)
    art.atomic_write(rt.path(art.REPORT_USERS), ev.render_user_scores(per_user))
    render_score_figure(rows, rt.path(art.REPORT_SCORES_FIG))
    render_f1_distribution_figure(per_user, rt.path(art.REPORT_F1_FIG))
    if out == "-":
        click.echo(report_text, nl=False)
    elif out:
        art.atomic_write(Path(out), report_text)
    return report_text


def stage_recommend(rt: Runtime, algo: str = "hypergraph") -> None:
    sessions = _load_sessions(rt)
    views = _load_universe(rt)
    universe = set(views)
    profiles = ev.build_profiles(sessions, rt.cfg.eval, universe)
    path = art.require(rt.path(art.clusters_artifact(algo)),
                       "run `partition` or `cluster` first")
    assignment = cc.parse_assignment(path.read_text("utf-8"), algo)
    clusters = [c for c in assignment.clusters() if c]
    pairs = []
    for profile in profiles:
        items = ev.recommend(profile, clusters, rt.cfg.recommend_n,
                             rt.cfg.eval, popularity=views)
        pairs.append((profile.user, items))
    art.atomic_write(rt.path(art.RECOMMENDATIONS),
                     ev.render_recommendations(pairs))


def run_pipeline(rt: Runtime, out: Optional[str] = None) -> str:
    stage_clean(rt)
    stage_sessions(rt)
    stage_tfidf(rt)
    stage_mine(rt)
    stage_hypergraph(rt)
    stage_partition(rt)
    for algo in CONTENT_ALGOS:
        stage_cluster(rt, algo)
    report = stage_evaluate(rt, out=out)
    stage_recommend(rt)
    return report


# ---------------------------------------------------------------------------
# Click wiring


def _common_options(fn):
    fn = click.option("--config", "-c", default=None,
                      help="TOML config file, or a packaged name like 'study'.")(fn)
    fn = click.option("--workdir", "-w", envvar="HYPERLENS_WORKDIR", default=None,
                      help="Artifact directory (env: HYPERLENS_WORKDIR).")(fn)
    fn = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                      help="Override a config key, e.g. mining.min_support=0.02.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Root seed override.")(fn)
    fn = click.option("--threads", type=int, default=None,
                      help="Thread count for per-user scoring.")(fn)
    return fn


def _runtime(config, workdir, overrides, seed, threads) -> Runtime:
    rt = _resolve_runtime(config, workdir, overrides, seed, threads)
    rt.workdir.mkdir(parents=True, exist_ok=True)
    rt.echo_config()
    return rt


@click.group()
def cli():
    """Access-log driven item clustering and recommendation pipeline."""


def _simple_command(name: str, stage, help_text: str):
    @cli.command(name=name, help=help_text)
    @_common_options
    def _cmd(config, workdir, overrides, seed, threads, _stage=stage):
        _stage(_runtime(config, workdir, overrides, seed, threads))
    return _cmd


_simple_command("synth", stage_synth,
                "Generate a synthetic log, catalog and ground truth.")
_simple_command("parse", stage_parse, "Parse the log and write a parse report.")
_simple_command("clean", stage_clean, "Drop asset and failed-status entries.")
_simple_command("sessions", stage_sessions,
                "Group cleaned entries into sessions and extract resources.")
_simple_command("tfidf", stage_tfidf,
                "Select the doc universe and build the title matrix.")
_simple_command("mine", stage_mine, "Mine frequent itemsets and rules.")
_simple_command("hypergraph", stage_hypergraph,
                "Build the rule hypergraph.")
_simple_command("partition", stage_partition,
                "Partition the hypergraph into balanced clusters.")


@cli.command(name="cluster", help="Run one content-clustering baseline "
             f"({', '.join(CONTENT_ALGOS)}), or 'all'.")
@click.argument("algorithm")
@_common_options
def cluster_cmd(algorithm, config, workdir, overrides, seed, threads):
    rt = _runtime(config, workdir, overrides, seed, threads)
    if algorithm == "all":
        for algo in CONTENT_ALGOS:
            stage_cluster(rt, algo)
        return
    if algorithm not in CONTENT_ALGOS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; "
                          f"pick one of {', '.join(CONTENT_ALGOS)} or 'all'")
    stage_cluster(rt, algorithm)


@cli.command(name="evaluate", help="Score every algorithm and write the report.")
@click.option("--out", default=None, help="Also write the report here ('-').")
@_common_options
def evaluate_cmd(out, config, workdir, overrides, seed, threads):
    stage_evaluate(_runtime(config, workdir, overrides, seed, threads), out=out)


@cli.command(name="recommend", help="Emit per-user recommendations.")
@click.option("--algorithm", default="hypergraph",
              help="Which clustering to recommend from.")
@_common_options
def recommend_cmd(algorithm, config, workdir, overrides, seed, threads):
    stage_recommend(_runtime(config, workdir, overrides, seed, threads),
                    algo=algorithm)


@cli.command(name="run-all", help="Run the whole pipeline end to end.")
@click.option("--out", default=None, help="Also write the report here ('-').")
@_common_options
def run_all_cmd(out, config, workdir, overrides, seed, threads):
    run_pipeline(_runtime(config, workdir, overrides, seed, threads), out=out)


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cli.main(args=argv, standalone_mode=False)
    except HyperlensError as exc:
        click.echo(f"error[{exc.category}]: {exc}", err=True)
        return _EXIT_CODES.get(exc.category, 1)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
