#!/usr/bin/env python3
"""Out-of-process embedding bridge for the pretrained Bengali encoders.

Protocol (what `racism-detect embed --embed-cmd` / RD_EMBED_CMD expects):
read one JSON array of strings from stdin, write one JSON array of
equal-length float vectors to stdout.

Usage:
    racism-detect embed --provider sahaj-bert \
        --embed-cmd "python3 scripts/st_embed.py neuropark/sahajBERT"

Model ids for the three supported providers:
    bangla-bert       csebuetnlp/banglabert        (768)
    bangla-bert-base  sagorsarker/bangla-bert-base (768)
    sahaj-bert        neuropark/sahajBERT          (1024)

Vectors are mean-pooled over tokens, the sentence-transformers convention.
Requires: pip install sentence-transformers (downloads the checkpoint on
first use).
"""

import json
import sys


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    model_id = sys.argv[1]

    from sentence_transformers import models, SentenceTransformer

    word = models.Transformer(model_id)
    pool = models.Pooling(word.get_word_embedding_dimension(), pooling_mode="mean")
    encoder = SentenceTransformer(modules=[word, pool])

    texts = json.load(sys.stdin)
    vectors = encoder.encode(texts, convert_to_numpy=True, show_progress_bar=False)
    json.dump([[float(x) for x in row] for row in vectors], sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
