"""Hybrid anime recommender: heterogeneous GraphSAGE rating regression.

Builds a user-anime graph from CSVs, fuses genre multi-hot features with
synopsis text embeddings, trains a two-layer hetero-SAGE encoder plus an
edge-MLP decoder with hand-written gradients, and serves RMSE metrics and
per-user top-k recommendation lists.
"""

__version__ = "0.1.0"
