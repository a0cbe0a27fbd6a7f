"""Offline neural extractors that emit the framesift on-disk formats.

The extractors run a detection model and an embedding encoder over the
frames listed in a dataset manifest and write detection JSON-lines and
embedding JSON-lines/binary files. They communicate with the pipeline
package purely through those files; nothing here imports it.
"""

from framesift_extractors.extract import (
    ExtractorJob,
    ExtractionReport,
    extract_detections,
    extract_embeddings,
)

__all__ = [
    "ExtractorJob",
    "ExtractionReport",
    "extract_detections",
    "extract_embeddings",
]
