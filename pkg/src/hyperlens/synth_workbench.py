"""Seeded synthetic proxy-log generator with planted communities.

Every emitted line is built as a :class:`~hyperlens.log_ingest.LogEntry`
and rendered through the shared serializer, so the whole corpus parses by
construction and round-trips byte-identically. Users and documents are
assigned to communities round-robin; each session draws from the user's
own community with the configured probability. A small fraction of views
is duplicated with a failure status so the cleaning stage has something to
remove; those lines never count toward ground truth.

Title modes: ``aligned`` gives every community a disjoint title
vocabulary, so content clustering can recover the communities; ``shuffled``
permutes the doc-to-title mapping, leaving title vocabulary uncorrelated
with the planted access communities.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Dict, List

from .errors import HyperlensError
from .log_ingest import LogEntry, render_log

logger = logging.getLogger(__name__)

_TZ = timezone(timedelta(hours=-5))
_START = datetime(2014, 6, 1, 0, 47, 10, tzinfo=_TZ)
_VOCAB_PER_COMMUNITY = 24
_THEME_WORDS = 2    # lead words present in every title of the community
_SAMPLED_WORDS = 4
_ALNUM = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"


class InvalidConfig(HyperlensError):
    category = "synth"


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 400
    n_docs: int = 300
    n_communities: int = 17
    sessions_per_user: float = 8.0
    session_len: float = 6.0
    in_community_prob: float = 0.9
    title_vocab_mode: str = "aligned"  # aligned | shuffled
    seed: int = 0
    failure_rate: float = 0.05  # chance a view also emits a failed-status line

    def validate(self) -> None:
        if self.n_users < 1 or self.n_docs < 1:
            raise InvalidConfig("need at least one user and one doc")
        if not 1 <= self.n_communities <= self.n_docs:
            raise InvalidConfig("n_communities must be in [1, n_docs]")
        if self.sessions_per_user <= 0 or self.session_len <= 0:
            raise InvalidConfig("session means must be positive")
        if not 0.0 <= self.in_community_prob <= 1.0:
            raise InvalidConfig("in_community_prob must be in [0, 1]")
        if not 0.0 <= self.failure_rate <= 1.0:
            raise InvalidConfig("failure_rate must be in [0, 1]")
        if self.title_vocab_mode not in ("aligned", "shuffled"):
            raise InvalidConfig(f"unknown title mode {self.title_vocab_mode!r}")


@dataclass
class GroundTruth:
    doc_community: Dict[str, int] = field(default_factory=dict)
    user_community: Dict[str, int] = field(default_factory=dict)
    doc_views: Dict[str, int] = field(default_factory=dict)
    user_distinct_items: Dict[str, int] = field(default_factory=dict)
    n_sessions: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        return cls(**json.loads(text))


@dataclass
class SynthResult:
    log_text: str
    catalog: Dict[str, str]
    truth: GroundTruth


def _poisson(rng: random.Random, mean: float) -> int:
    # Knuth's method; fine for the small means used here.
    limit = math.exp(-mean)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def _doc_url(doc_id: str, community: int, doc_index: int) -> str:
    if doc_index % 2 == 0:
        return (f"http://site.ebrary.com:80/lib/oculryerson/"
                f"docDetail.action?docID={doc_id}")
    return (f"http://journals.example.com/article?jid=J{community}"
            f"&vol={1 + doc_index % 9}&doc={doc_id}")


def generate(cfg: SynthConfig) -> SynthResult:
    """Produce log text, a doc-id/title catalog, and the planted truth."""
    cfg.validate()
    rng = random.Random(cfg.seed)

    doc_ids = [f"D{i:05d}" for i in range(1, cfg.n_docs + 1)]
    doc_community = {doc: i % cfg.n_communities for i, doc in enumerate(doc_ids)}
    community_docs: List[List[str]] = [[] for _ in range(cfg.n_communities)]
    for doc in doc_ids:
        community_docs[doc_community[doc]].append(doc)

    vocab = [[f"w{c:02d}{j:02d}" for j in range(_VOCAB_PER_COMMUNITY)]
             for c in range(cfg.n_communities)]
    # Titles open with the community theme words, so titles of one
    # community always share vocabulary while communities stay disjoint.
    titles = []
    for doc in doc_ids:
        words = vocab[doc_community[doc]]
        titles.append(" ".join(
            words[:_THEME_WORDS] + rng.sample(words[_THEME_WORDS:], _SAMPLED_WORDS)))
    if cfg.title_vocab_mode == "shuffled":
        rng.shuffle(titles)
    catalog = dict(zip(doc_ids, titles))
    doc_urls = {doc: _doc_url(doc, doc_community[doc], i)
                for i, doc in enumerate(doc_ids)}

    truth = GroundTruth(doc_community=doc_community)
    entries: List[LogEntry] = []
    clock = _START
    user_items: Dict[str, set] = {}

    for u in range(cfg.n_users):
        host = f"10.{(u >> 8) & 255}.{u & 255}.7"
        username = "".join(rng.choice(_ALNUM) for _ in range(12))
        user_key = f"{host}|{username}"
        community = u % cfg.n_communities
        truth.user_community[user_key] = community
        user_items[user_key] = set()
        own_docs = community_docs[community]
        other_docs = [d for d in doc_ids if doc_community[d] != community]

        n_sessions = max(1, _poisson(rng, cfg.sessions_per_user))
        for _ in range(n_sessions):
            truth.n_sessions += 1
            session_id = f"{rng.getrandbits(128):032x}"
            clock += timedelta(seconds=60 + int(rng.expovariate(1.0 / 3600.0)))
            length = max(1, _poisson(rng, cfg.session_len))
            for _ in range(length):
                if other_docs and rng.random() >= cfg.in_community_prob:
                    doc = rng.choice(other_docs)
                else:
                    doc = rng.choice(own_docs)
                clock += timedelta(seconds=1 + int(rng.expovariate(1.0 / 30.0)))
                url = doc_urls[doc]
                entries.append(LogEntry(
                    host=host, username=username, remote_user="-",
                    session_id=session_id, timestamp=clock, method="GET",
                    url=url, protocol="HTTP/1.1", status=200,
                    bytes=rng.randrange(1000, 100000)))
                truth.doc_views[doc] = truth.doc_views.get(doc, 0) + 1
                user_items[user_key].add(doc)
                if rng.random() < cfg.failure_rate:
                    # Same request failing; cleaning must drop it.
                    clock += timedelta(seconds=1)
                    entries.append(LogEntry(
                        host=host, username=username, remote_user="-",
                        session_id=session_id, timestamp=clock, method="GET",
                        url=url, protocol="HTTP/1.1",
                        status=rng.choice((301, 302, 404, 500)), bytes=None))

    truth.user_distinct_items = {user: len(items)
                                 for user, items in user_items.items()}
    return SynthResult(log_text=render_log(entries), catalog=catalog, truth=truth)
