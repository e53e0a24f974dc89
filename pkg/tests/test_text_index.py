import math
import random

import numpy as np
import pytest

from hyperlens.text_index import (Dictionary, EmptyDictionary, TermDocMatrix,
                                  UnknownTerm, build_dictionary, build_matrix,
                                  default_stopwords, idf, make_title_doc,
                                  parse_matrix, render_dictionary,
                                  render_matrix, tokenize)

STOP = default_stopwords()


def test_tokenize_stopwords():
    assert tokenize("The Theory of Games", STOP) == ["theory", "games"]


def test_tokenize_empty():
    assert tokenize("", STOP) == []


def test_tokenize_punctuation():
    assert tokenize("TCP/IP Networks!", STOP) == ["tcp", "ip", "networks"]


def test_tokenize_short_tokens_dropped():
    assert tokenize("x y zz", set()) == ["zz"]


def test_idf_equal_df_n():
    d = Dictionary(terms=["a"], df={"a": 100}, n_docs=100)
    assert idf("a", d) == 0.0


def test_idf_direct_substitution():
    d = Dictionary(terms=["a"], df={"a": 2}, n_docs=8)
    assert abs(idf("a", d) - math.log(4)) < 1e-12


def test_idf_unknown_term():
    d = Dictionary(terms=["a"], df={"a": 1}, n_docs=1)
    with pytest.raises(UnknownTerm):
        idf("b", d)


def _random_titles(n, rng):
    pool = [f"word{i:02d}" for i in range(40)]
    return [" ".join(rng.choice(pool) for _ in range(rng.randint(2, 8)))
            for _ in range(n)]


def test_dictionary_df_matches_brute_force_recount():
    rng = random.Random(7)
    titles = _random_titles(200, rng)
    docs = [make_title_doc(f"d{i}", t, STOP) for i, t in enumerate(titles)]
    dictionary = build_dictionary(docs)
    assert dictionary.n_docs == 200
    # Brute-force recount straight from the raw titles.
    for term in dictionary.terms:
        count = sum(1 for t in titles if term in tokenize(t, STOP))
        assert dictionary.df[term] == count
        assert 1 <= count <= dictionary.n_docs


def test_build_matrix_zero_row_when_df_equals_n():
    docs = [make_title_doc("a", "shared theory", STOP),
            make_title_doc("b", "shared theory", STOP)]
    d = build_dictionary(docs)
    m = build_matrix(docs, d, normalize=False)
    assert np.all(m.values == 0)


def test_build_matrix_identical_titles_identical_rows():
    docs = [make_title_doc("a", "alpha beta gamma", STOP),
            make_title_doc("b", "alpha beta gamma", STOP),
            make_title_doc("c", "delta epsilon", STOP)]
    d = build_dictionary(docs)
    m = build_matrix(docs, d, normalize=True)
    row_a = m.values[m.doc_ids.index("a")]
    row_b = m.values[m.doc_ids.index("b")]
    assert np.array_equal(row_a, row_b)
    assert abs(float(row_a @ row_b) - 1.0) < 1e-9  # cosine of identical titles


def test_build_matrix_entries_match_double_loop():
    rng = random.Random(11)
    titles = _random_titles(50, rng)
    docs = [make_title_doc(f"d{i:02d}", t, STOP) for i, t in enumerate(titles)]
    d = build_dictionary(docs)
    m = build_matrix(docs, d, normalize=False)

    docs_sorted = sorted(docs, key=lambda x: x.doc_id)
    for row, doc in enumerate(docs_sorted):
        for col, term in enumerate(m.terms):
            count = doc.terms.count(term)
            expected = count * math.log(d.n_docs / d.df[term]) if count else 0.0
            assert m.values[row, col] == pytest.approx(expected, abs=1e-12)


def test_matrix_sparsity_counts_incidences():
    # No term occurs in every doc, so no idf-zero cells.
    docs = [make_title_doc("a", "alpha beta", STOP),
            make_title_doc("b", "beta gamma", STOP),
            make_title_doc("c", "delta", STOP)]
    d = build_dictionary(docs)
    m = build_matrix(docs, d, normalize=False)
    incidences = sum(len(set(doc.terms)) for doc in docs)
    assert np.count_nonzero(m.values) == incidences


def test_build_matrix_idf_mode_ignores_repeats():
    docs = [make_title_doc("a", "alpha alpha beta", STOP),
            make_title_doc("b", "gamma", STOP)]
    d = build_dictionary(docs)
    tfidf = build_matrix(docs, d, normalize=False, weighting="tf-idf")
    plain = build_matrix(docs, d, normalize=False, weighting="idf")
    col = tfidf.terms.index("alpha")
    assert tfidf.values[0, col] == pytest.approx(2 * math.log(2))
    assert plain.values[0, col] == pytest.approx(math.log(2))


def test_build_matrix_normalized_rows_unit_norm():
    rng = random.Random(3)
    docs = [make_title_doc(f"d{i}", t, STOP)
            for i, t in enumerate(_random_titles(30, rng))]
    d = build_dictionary(docs)
    m = build_matrix(docs, d, normalize=True)
    norms = np.linalg.norm(m.values, axis=1)
    for norm in norms:
        assert norm == pytest.approx(1.0, abs=1e-9) or norm == 0.0


def test_empty_dictionary_raises():
    with pytest.raises(EmptyDictionary):
        build_matrix([], Dictionary(terms=[], df={}, n_docs=0))


def test_unknown_doc_term_raises():
    docs = [make_title_doc("a", "alpha", STOP)]
    d = build_dictionary(docs)
    stray = [make_title_doc("b", "unseen", STOP)]
    with pytest.raises(UnknownTerm):
        build_matrix(stray, d)


def test_render_parse_matrix_round_trip():
    # No df == n_docs terms, so no all-zero columns vanish from the triplets.
    docs = [make_title_doc("a", "alpha beta", STOP),
            make_title_doc("b", "gamma delta", STOP)]
    d = build_dictionary(docs)
    m = build_matrix(docs, d, normalize=True)
    text = render_matrix(m)
    again = parse_matrix(text, ["a", "b"])
    assert again.doc_ids == m.doc_ids
    assert again.terms == m.terms
    assert np.array_equal(again.values, m.values)


def test_render_dictionary_shape():
    docs = [make_title_doc("a", "alpha beta", STOP)]
    d = build_dictionary(docs)
    text = render_dictionary(d)
    assert text == "alpha\t1\nbeta\t1\n"
