"""Title dictionary and the IDF-weighted term-document matrix.

Titles are the only text available for catalog items, so the vector space
is built from title tokens alone. IDF uses the natural log of N over
document frequency; cell values are term count times IDF by default, with
a pure-IDF mode available. Rows and columns are kept sorted (doc id, term)
so every downstream consumer sees one canonical ordering.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from importlib import resources
from math import log
from typing import Dict, Iterable, List, Optional, Set

import numpy as np

from .errors import HyperlensError

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_MIN_TOKEN_LEN = 2


class UnknownTerm(HyperlensError):
    category = "text-index"


class EmptyDictionary(HyperlensError):
    category = "text-index"


def default_stopwords() -> Set[str]:
    """The standard English stop-word list shipped with the package."""
    text = resources.files("hyperlens.data").joinpath("stopwords.txt").read_text("utf-8")
    return {w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#")}


def tokenize(title: str, stopwords: Optional[Set[str]] = None) -> List[str]:
    """Case-fold, split on punctuation, drop stop-words and 1-char tokens."""
    if stopwords is None:
        stopwords = default_stopwords()
    tokens = _TOKEN_RE.findall(title.casefold())
    return [t for t in tokens if len(t) >= _MIN_TOKEN_LEN and t not in stopwords]


@dataclass(frozen=True)
class TitleDoc:
    doc_id: str
    title: str
    terms: tuple


def make_title_doc(doc_id: str, title: str,
                   stopwords: Optional[Set[str]] = None) -> TitleDoc:
    return TitleDoc(doc_id=doc_id, title=title,
                    terms=tuple(tokenize(title, stopwords)))


@dataclass
class Dictionary:
    terms: List[str]           # sorted
    df: Dict[str, int]         # term -> number of docs containing it
    n_docs: int

    def index(self) -> Dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}


def build_dictionary(docs: Iterable[TitleDoc]) -> Dictionary:
    """Two-pass fold: every doc counts toward N, df counts distinct terms."""
    df: Dict[str, int] = {}
    n_docs = 0
    for doc in docs:
        n_docs += 1
        for term in set(doc.terms):
            df[term] = df.get(term, 0) + 1
    return Dictionary(terms=sorted(df), df=df, n_docs=n_docs)


def idf(term: str, dictionary: Dictionary) -> float:
    """ln(N / df); 0 exactly when the term appears in every document."""
    count = dictionary.df.get(term)
    if count is None:
        raise UnknownTerm(f"term {term!r} not in dictionary")
    if count == dictionary.n_docs:
        return 0.0
    return log(dictionary.n_docs / count)


@dataclass
class TermDocMatrix:
    doc_ids: List[str]         # sorted
    terms: List[str]           # sorted, matches Dictionary.terms
    values: np.ndarray         # shape (n_docs, n_terms), float64
    weighting: str             # "tf-idf" or "idf"
    row_normalized: bool


def build_matrix(docs: Iterable[TitleDoc], dictionary: Dictionary,
                 normalize: bool = True, weighting: str = "tf-idf") -> TermDocMatrix:
    """Cell (d, t) is count(t in d) x idf(t) ("tf-idf") or presence x idf
    ("idf"); rows are L2-normalized on request (zero rows stay zero)."""
    if not dictionary.terms:
        raise EmptyDictionary("dictionary has no terms")
    if weighting not in ("tf-idf", "idf"):
        raise ValueError(f"unknown weighting {weighting!r}")
    docs = sorted(docs, key=lambda d: d.doc_id)
    term_index = dictionary.index()
    idf_values = {t: idf(t, dictionary) for t in dictionary.terms}

    values = np.zeros((len(docs), len(dictionary.terms)))
    for row, doc in enumerate(docs):
        for term in doc.terms:
            col = term_index.get(term)
            if col is None:
                raise UnknownTerm(
                    f"doc {doc.doc_id!r} term {term!r} not in dictionary")
        if weighting == "tf-idf":
            for term in doc.terms:
                values[row, term_index[term]] += idf_values[term]
        else:
            for term in set(doc.terms):
                values[row, term_index[term]] = idf_values[term]

    if normalize:
        norms = np.linalg.norm(values, axis=1)
        nonzero = norms > 0
        values[nonzero] /= norms[nonzero, None]

    return TermDocMatrix(doc_ids=[d.doc_id for d in docs],
                         terms=list(dictionary.terms), values=values,
                         weighting=weighting, row_normalized=normalize)


def render_dictionary(dictionary: Dictionary) -> str:
    """``term<TAB>df`` rows in term order."""
    return "".join(f"{t}\t{dictionary.df[t]}\n" for t in dictionary.terms)


def render_matrix(matrix: TermDocMatrix) -> str:
    """Sparse triplet TSV ``doc_id<TAB>term<TAB>weight``; weights use repr
    so a reload reproduces the exact floats."""
    out = []
    for row, doc_id in enumerate(matrix.doc_ids):
        for col in np.nonzero(matrix.values[row])[0]:
            out.append(f"{doc_id}\t{matrix.terms[col]}"
                       f"\t{float(matrix.values[row, col])!r}\n")
    return "".join(out)


def parse_matrix(text: str, doc_ids: List[str], weighting: str = "tf-idf",
                 row_normalized: bool = True) -> TermDocMatrix:
    """Rebuild a TermDocMatrix from triplet TSV text.

    ``doc_ids`` must list every document (docs whose row is all zero have
    no triplets, so the caller supplies the full universe).
    """
    triplets = []
    terms = set()
    for line in text.splitlines():
        if not line.strip():
            continue
        doc_id, term, weight = line.split("\t")
        triplets.append((doc_id, term, float(weight)))
        terms.add(term)
    doc_ids = sorted(doc_ids)
    term_list = sorted(terms)
    doc_index = {d: i for i, d in enumerate(doc_ids)}
    term_index = {t: i for i, t in enumerate(term_list)}
    values = np.zeros((len(doc_ids), len(term_list)))
    for doc_id, term, weight in triplets:
        if doc_id not in doc_index:
            raise HyperlensError(f"matrix row for unknown doc {doc_id!r}")
        values[doc_index[doc_id], term_index[term]] = weight
    return TermDocMatrix(doc_ids=doc_ids, terms=term_list, values=values,
                         weighting=weighting, row_normalized=row_normalized)
