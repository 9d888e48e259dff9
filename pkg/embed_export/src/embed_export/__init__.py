"""Synopsis embedding exporter for the sagerec embedding CSV format."""

from .exporter import ExportConfig, ExportError, export_embeddings, split_sentences

__all__ = ["ExportConfig", "ExportError", "export_embeddings", "split_sentences"]
__version__ = "0.1.0"
