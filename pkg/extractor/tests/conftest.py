"""Session fixtures: a tiny local BERT checkpoint with a wordpiece vocab."""

import json

import pytest

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "recur", "##sion", "func", "##tion", "list", "process", "##ing",
    "data", "intro", "of", "the", "slide", "structure", "expression",
]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    path = tmp_path_factory.mktemp("ckpt")
    (path / "vocab.txt").write_text("\n".join(VOCAB) + "\n")
    tokenizer = BertTokenizer(str(path / "vocab.txt"))
    tokenizer.save_pretrained(str(path))

    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=16,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=64,
    )
    BertModel(config).save_pretrained(str(path))
    return path


@pytest.fixture(scope="session")
def toy_deck_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("deck") / "toy.slides.jsonl"
    def t(surface, pos="NOUN"):
        return {"surface": surface, "pos": pos}
    slides = [
        {"index": 0, "title": [t("recursion")],
         "body": [t("func"), t("of", "OTHER"), t("recursion")]},
        {"index": 1, "title": [t("list"), t("processing")],
         "body": [t("data"), t("the", "OTHER"), t("structure")]},
        {"index": 2, "title": [],
         "body": [t("expression"), t("data")]},
    ]
    with open(path, "w", encoding="utf-8") as fh:
        for s in slides:
            fh.write(json.dumps(s) + "\n")
    return path
