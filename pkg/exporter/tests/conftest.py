import os

import pytest


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    """A local randomly-initialized 768-dim encoder checkpoint.

    Weights are arbitrary (the exporter's contracts are about format,
    pooling, and determinism, not embedding quality), but seeded so the
    checkpoint is reproducible.
    """
    import torch
    from transformers import BertTokenizerFast, DistilBertConfig, DistilBertModel

    outdir = tmp_path_factory.mktemp("ckpt")
    torch.manual_seed(0)
    config = DistilBertConfig(
        vocab_size=40, dim=768, n_layers=1, n_heads=2, hidden_dim=128,
        max_position_embeddings=64,
    )
    DistilBertModel(config).save_pretrained(outdir)

    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + [f"w{i}" for i in range(35)]
    vocab_file = os.path.join(outdir, "vocab.txt")
    with open(vocab_file, "w", encoding="utf-8") as fh:
        fh.write("\n".join(vocab) + "\n")
    BertTokenizerFast(vocab_file=vocab_file, do_lower_case=True).save_pretrained(outdir)
    return str(outdir)
