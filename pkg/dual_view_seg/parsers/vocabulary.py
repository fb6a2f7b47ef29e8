"""Vocabulary file and whitespace tokenizer"""

from functools import lru_cache
from pathlib import Path

from dual_view_seg.config.paths import VOCAB_FILE
from dual_view_seg.errors import TokenizationError
from dual_view_seg.models.sample import TokenSeq

PAD_ID = 0
UNK_ID = 1


class Vocabulary:
    """Token table read from a file with one token per line

    Line 0 is PAD and line 1 is UNK.
    """

    def __init__(self, tokens: list[str]):
        if len(tokens) < 2:
            raise TokenizationError("vocabulary needs PAD and UNK entries")
        self.tokens = tokens
        self.index = {token: i for i, token in enumerate(tokens)}

    @classmethod
    def from_file(cls, path: Path = VOCAB_FILE) -> "Vocabulary":
        lines = path.read_text(encoding="utf-8").splitlines()
        return cls([line.strip() for line in lines if line.strip()])

    def __len__(self) -> int:
        return len(self.tokens)

    def lookup(self, word: str) -> int:
        return self.index.get(word, UNK_ID)

    def tokenize(self, expression: str, length: int) -> TokenSeq:
        """Lowercase whitespace tokenization, clipped at ``length`` and right-padded"""
        words = expression.lower().split()
        if not words:
            raise TokenizationError("expression is empty")
        ids = [self.lookup(w) for w in words[:length]]
        n_real = len(ids)
        ids += [PAD_ID] * (length - n_real)
        mask = [True] * n_real + [False] * (length - n_real)
        return TokenSeq(ids=tuple(ids), attn_mask=tuple(mask))


@lru_cache(maxsize=1)
def default_vocabulary() -> Vocabulary:
    return Vocabulary.from_file(VOCAB_FILE)


def tokenize(expression: str, length: int, vocab: Vocabulary | None = None) -> TokenSeq:
    """Tokenize with the packaged vocabulary unless one is given"""
    return (vocab or default_vocabulary()).tokenize(expression, length)
