"""Workdir artifact names and atomic file writes.

Every stage output goes through :func:`atomic_write` (temp file + rename in
the same directory), so an interrupted run never leaves a partial artifact
behind.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Union

from .errors import MissingArtifact

LOG = "synth.log"
CATALOG = "catalog.tsv"
GROUND_TRUTH = "ground_truth.json"
PARSE_REPORT = "parse_report.json"
CLEANED_LOG = "cleaned.log"
CLEANING_REPORT = "cleaning_report.json"
SESSIONS = "sessions.jsonl"
SESSION_REPORT = "session_report.json"
UNIVERSE = "universe.tsv"
DICTIONARY = "dictionary.tsv"
MATRIX = "matrix.tsv"
RULES = "rules.tsv"
MINING_REPORT = "mining_report.json"
HYPERGRAPH = "hypergraph.hg"
HYPERGRAPH_VERTICES = "hypergraph_vertices.txt"
PARTITION = "partition.txt"
CUT_REPORT = "cut_report.json"
REPORT = "report.tsv"
REPORT_USERS = "report_users.json"
REPORT_SCORES_FIG = "report_scores.png"
REPORT_F1_FIG = "report_f1_distribution.png"
RECOMMENDATIONS = "recommendations.jsonl"
CONFIG_USED = "config_used.toml"


def clusters_artifact(algorithm: str) -> str:
    return f"clusters_{algorithm}.tsv"


def atomic_write(path: Union[str, Path], data: Union[str, bytes]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
    return path


def require(path: Union[str, Path], hint: str = "") -> Path:
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(str(path), hint)
    return path
