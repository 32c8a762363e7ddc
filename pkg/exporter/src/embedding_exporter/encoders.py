"""Document encoders: pretrained sentence embeddings and averaged word vectors.

An encoder is any object with an `encoder_id` string and an
`encode(texts) -> (n, dim) float32 array` method. Heavy dependencies load
lazily so that constructing specs and running offline paths stays cheap.
"""

from __future__ import annotations

import os
import re
from pathlib import Path

import numpy as np

from .errors import EncoderFailure

SENTENCE_MODEL_ID = "sentence-transformers/all-mpnet-base-v2"
_TOKEN = re.compile(r"[0-9a-z]+")


class SentenceEncoder:
    """Pretrained transformer sentence embeddings, truncated at the model's token limit."""

    def __init__(self, model_id: str = SENTENCE_MODEL_ID, batch_size: int = 64):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EncoderFailure(
                "sentence-encoder needs sentence-transformers (pip install sentence-transformers)"
            ) from exc
        self.encoder_id = model_id
        self.batch_size = batch_size
        self._model = SentenceTransformer(model_id)

    def encode(self, texts) -> np.ndarray:
        out = self._model.encode(
            list(texts),
            batch_size=self.batch_size,
            convert_to_numpy=True,
            show_progress_bar=len(texts) > 1000,
        )
        return np.asarray(out, dtype=np.float32)


class AveragedWordVectors:
    """Mean of per-token word vectors; tokens are lowercased [0-9a-z]+ runs.

    Vectors come from a GloVe-style text file (word then floats per line)
    named by `vectors_path` or the EXPORTER_WORD_VECTORS environment variable.
    Documents with no in-vocabulary token embed as the zero vector.
    """

    def __init__(self, vectors_path: str | None = None):
        path = vectors_path or os.environ.get("EXPORTER_WORD_VECTORS")
        if not path:
            raise EncoderFailure(
                "averaged-word-vectors needs a vectors file: pass vectors_path "
                "or set EXPORTER_WORD_VECTORS"
            )
        path = Path(path)
        if not path.exists():
            raise EncoderFailure(f"word vectors file not found: {path}")
        self.encoder_id = f"averaged-word-vectors:{path.name}"
        self._vocab: dict[str, np.ndarray] = {}
        dim = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                parts = line.rstrip("\n").split(" ")
                if len(parts) < 2:
                    continue
                vec = np.asarray(parts[1:], dtype=np.float32)
                if dim is None:
                    dim = vec.size
                elif vec.size != dim:
                    raise EncoderFailure(f"inconsistent vector width in {path}")
                self._vocab[parts[0]] = vec
        if not self._vocab:
            raise EncoderFailure(f"no vectors parsed from {path}")
        self.dim = dim

    def encode(self, texts) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            hits = [self._vocab[t] for t in _TOKEN.findall(text.lower()) if t in self._vocab]
            if hits:
                out[i] = np.mean(hits, axis=0)
        return out


ENCODERS = {
    "sentence-encoder": SentenceEncoder,
    "averaged-word-vectors": AveragedWordVectors,
}


def get_encoder(name: str):
    if name not in ENCODERS:
        raise ValueError(f"unknown encoder {name!r}, expected one of {sorted(ENCODERS)}")
    return ENCODERS[name]()
