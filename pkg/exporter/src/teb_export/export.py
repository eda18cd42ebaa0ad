"""Export frozen-encoder tweet embeddings to the TEB1 binary format.

Each tweet is normalized with the summarizer's text-normalization
contract, encoded to at most ``max_tokens`` wordpieces by the model's own
tokenizer, and represented as the mean of the encoder's final-layer
hidden states over non-padding positions.  Records are written in input
order; a tweet that fails to encode gets a zero vector and a warning.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from tweetsumm.embed import EMBED_DIM, write_store
from tweetsumm.preprocess import normalize

log = logging.getLogger("teb_export")

MAX_TOKENS = 50


class ExportError(Exception):
    pass


def _read_stream(path):
    """(id, text) pairs in file order; the stream is the summarizer's
    ingest JSON Lines format."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                pairs.append((int(rec["id"]), str(rec["text"])))
            except (ValueError, KeyError, TypeError) as exc:
                raise ExportError(f"{path}:{lineno}: malformed stream record: {exc}") from exc
    return pairs


def _load_encoder(model_name: str):
    import torch
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(model_name)
        model = AutoModel.from_pretrained(model_name)
    except Exception as exc:
        raise ExportError(f"cannot load model {model_name!r}: {exc}") from exc
    hidden = getattr(model.config, "dim", None) or getattr(model.config, "hidden_size", None)
    if hidden != EMBED_DIM:
        raise ExportError(
            f"model {model_name!r} has hidden size {hidden}, expected {EMBED_DIM}"
        )
    model.eval()
    torch.set_grad_enabled(False)
    return tokenizer, model


def _encode_batch(texts, tokenizer, model, max_tokens: int):
    import torch

    enc = tokenizer(
        texts, padding=True, truncation=True, max_length=max_tokens, return_tensors="pt"
    )
    hidden = model(**enc).last_hidden_state  # (batch, seq, dim)
    mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
    summed = (hidden * mask).sum(dim=1)
    counts = mask.sum(dim=1).clamp(min=1.0)
    return (summed / counts).numpy().astype("<f4")


def export(stream_path, model_name: str, out_path, batch_size: int = 32,
           max_tokens: int = MAX_TOKENS) -> int:
    """Write one TEB1 record per input tweet; returns the record count."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    tokenizer, model = _load_encoder(model_name)
    pairs = _read_stream(stream_path)

    records = []
    for start in range(0, len(pairs), batch_size):
        batch = pairs[start : start + batch_size]
        texts = [normalize(text) for _, text in batch]
        try:
            vectors = _encode_batch(texts, tokenizer, model, max_tokens)
        except Exception:
            # isolate the failing tweet(s); the rest of the batch survives
            vectors = np.zeros((len(batch), EMBED_DIM), dtype="<f4")
            for i, text in enumerate(texts):
                try:
                    vectors[i] = _encode_batch([text], tokenizer, model, max_tokens)[0]
                except Exception as exc:
                    log.warning("tweet %d failed to encode (%s); zero vector",
                                batch[i][0], exc)
        records.extend(
            (tweet_id, vectors[i]) for i, (tweet_id, _) in enumerate(batch)
        )

    write_store(out_path, records, dimension=EMBED_DIM)
    return len(records)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="teb-export", description=__doc__)
    parser.add_argument("--stream", required=True, help="tweet JSON Lines file")
    parser.add_argument("--model", required=True,
                        help="model name or local checkpoint directory")
    parser.add_argument("--out", required=True, help="output TEB1 file")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--max-tokens", type=int, default=MAX_TOKENS)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        count = export(args.stream, args.model, args.out, args.batch_size, args.max_tokens)
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {count} embeddings to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
