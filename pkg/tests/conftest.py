from __future__ import annotations

import numpy as np
import pytest

from pmsearch.indexing import Document, build_index
from pmsearch.space import default_space
from pmsearch.terminology import sample_lexicons


@pytest.fixture(scope="session")
def space():
    return default_space()


@pytest.fixture(scope="session")
def lexicons():
    return sample_lexicons()


@pytest.fixture()
def three_doc_index():
    docs = [
        Document("d1", text_fields={"title": "cancer therapy", "abstract": ""}),
        Document("d2", text_fields={"title": "cancer", "abstract": ""}),
        Document("d3", text_fields={"title": "gene therapy", "abstract": ""}),
    ]
    return docs, build_index(docs)


def random_document(rng: np.random.Generator, doc_id: str, vocab: list[str],
                    structured: bool = False) -> Document:
    def words(lo: int, hi: int) -> str:
        n = int(rng.integers(lo, hi + 1))
        return " ".join(vocab[int(i)] for i in rng.integers(0, len(vocab), n))

    mesh = [words(1, 3) for _ in range(int(rng.integers(0, 3)))]
    gene = [vocab[int(i)] for i in rng.integers(0, len(vocab), int(rng.integers(0, 2)))]
    min_age = max_age = None
    sex = None
    if structured:
        min_age = int(rng.integers(0, 60))
        max_age = min_age + int(rng.integers(0, 40))
        sex = ("male", "female", "all")[int(rng.integers(0, 3))]
    return Document(
        doc_id,
        text_fields={"title": words(1, 8), "abstract": words(5, 40)},
        term_list_fields={"mesh": mesh, "gene": gene},
        min_age=min_age,
        max_age=max_age,
        sex=sex,
    )


def random_corpus(rng: np.random.Generator, n_docs: int, vocab_size: int = 40,
                  structured: bool = False) -> list[Document]:
    vocab = [f"w{i}" for i in range(vocab_size)]
    return [
        random_document(rng, f"doc{i:04d}", vocab, structured=structured)
        for i in range(n_docs)
    ]
