import pytest

from dual_view_seg.errors import TokenizationError
from dual_view_seg.parsers import PAD_ID, UNK_ID, Vocabulary, tokenize


def test_short_expression_is_padded(vocab):
    tokens = vocab.tokenize("the red circle", 20)

    assert len(tokens) == 20
    assert tokens.attn_mask == (True,) * 3 + (False,) * 17
    assert tokens.ids[3:] == (PAD_ID,) * 17
    assert tokens.ids[:3] == tuple(vocab.lookup(w) for w in ("the", "red", "circle"))


def test_long_expression_is_clipped(vocab):
    expression = " ".join(["red"] * 25)
    tokens = vocab.tokenize(expression, 20)

    assert tokens.ids == (vocab.lookup("red"),) * 20
    assert all(tokens.attn_mask)


def test_unknown_words_map_to_unk(vocab):
    tokens = vocab.tokenize("The Zeppelin", 4)
    assert tokens.ids[0] == vocab.lookup("the")
    assert tokens.ids[1] == UNK_ID


def test_tokenization_is_deterministic(vocab):
    assert vocab.tokenize("the blue bar", 8) == vocab.tokenize("the blue bar", 8)


def test_empty_expression_is_rejected(vocab):
    with pytest.raises(TokenizationError):
        vocab.tokenize("   ", 8)


def test_vocabulary_file_reserves_pad_and_unk(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("<pad>\n<unk>\nthe\ncircle\n", encoding="utf-8")
    vocab = Vocabulary.from_file(path)

    assert len(vocab) == 4
    assert tokenize("the circle", 3, vocab).ids == (2, 3, PAD_ID)


def test_vocabulary_needs_reserved_entries():
    with pytest.raises(TokenizationError):
        Vocabulary(["<pad>"])


def test_packaged_vocabulary_covers_scene_words(vocab):
    from dual_view_seg.models import COLORS, SHAPES, SIZES

    for word in [*COLORS, *SHAPES, *SIZES, "the", "on", "at", "left", "top"]:
        assert vocab.lookup(word) != UNK_ID, word
