"""Access-log driven item clustering and recommendation for digital libraries.

The pipeline turns proxy access logs into item clusters two ways: content
clustering over title TF-IDF vectors, and access-pattern clustering via
association rules partitioned as a weighted hypergraph. Both are scored
with the same profile-vs-cluster precision/recall/F1 protocol.
"""

from .errors import ConfigError, HyperlensError, KTooLarge, MissingArtifact

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "HyperlensError",
    "KTooLarge",
    "MissingArtifact",
    "__version__",
]
