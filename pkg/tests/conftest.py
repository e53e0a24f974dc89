import numpy as np
import pytest

from hyperlens.text_index import TermDocMatrix

# The documented proxy log sample used across parser tests.
SAMPLE_LINE = (
    "10.0.0.1 X2bFdM1R3txwlkv - 13d8f72f08d1a4e1c418a7cb8fc31437 "
    "[01/Jun/2014:00:47:10 -0500] "
    '"GET http://site.ebrary.com:80/lib/oculryerson/docDetail.action?docID=10251051 HTTP/1.1" '
    "200 29732"
)


def make_matrix(values, doc_ids=None) -> TermDocMatrix:
    """Wrap a raw array as a TermDocMatrix for clustering tests."""
    values = np.asarray(values, dtype=float)
    if doc_ids is None:
        doc_ids = [f"D{i:03d}" for i in range(values.shape[0])]
    terms = [f"t{j}" for j in range(values.shape[1])]
    return TermDocMatrix(doc_ids=list(doc_ids), terms=terms, values=values,
                         weighting="tf-idf", row_normalized=False)


@pytest.fixture
def sample_line():
    return SAMPLE_LINE
