"""Single-image morphing attack detection toolkit."""

__version__ = "0.1.0"

from morphdet.dataset import (  # noqa: F401
    AlignedFace,
    DatasetManifest,
    SampleRecord,
    SplitPair,
    load_manifest,
    preprocess_face,
    split_train_test,
)
