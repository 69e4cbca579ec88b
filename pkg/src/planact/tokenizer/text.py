"""Template-grammar text tokenizer (fixed 64-word vocabulary).

Cell references like ``(3,5)`` tokenize as two digit tokens and are
reassembled on decode, so the round trip is lossless on the template
grammar while text slots stay short.
"""

from __future__ import annotations

import re

PAD, BOS, EOS, UNK = 0, 1, 2, 3

_WORDS = (
    ["<pad>", "<bos>", "<eos>", "<unk>"]
    + ["red", "green", "blue", "yellow", "purple", "orange", "cyan", "pink"]
    + [str(d) for d in range(10)]
    + ["brick", "to", "into", "box", "at", "assemble", "the", "match", "goal",
       "arrange", "objects", "move", "board", "place", "on", "stack", "bricks",
       "bowl", "banana", "can", "cup", "plate", "ball", "book", "bottle"]
)

V_TXT = 64


class UnknownWord(ValueError):
    """Word outside the template vocabulary."""


class Vocab:
    """Fixed word-level vocabulary; ids above the word list are reserved."""

    def __init__(self):
        self.words = list(_WORDS)
        self.size = V_TXT
        self._ids = {w: i for i, w in enumerate(self.words)}
        assert len(self.words) <= self.size

    def id_of(self, word: str) -> int:
        try:
            return self._ids[word]
        except KeyError:
            raise UnknownWord(f"not in template vocabulary: {word!r}") from None

    def word_of(self, tid: int) -> str:
        if 0 <= tid < len(self.words):
            return self.words[tid]
        return "<unk>"

    _CELL = re.compile(r"\((\d+),(\d+)\)")

    def encode(self, s: str, length: int | None = None) -> list[int]:
        """Tokens for a template string, EOS-terminated, PAD-filled to length."""
        s = self._CELL.sub(lambda m: f"{m.group(1)} {m.group(2)}", s.strip())
        ids = [self.id_of(w) for w in s.split()] if s else []
        ids.append(EOS)
        if length is not None:
            if len(ids) > length:
                raise UnknownWord(f"string needs {len(ids)} tokens, slot holds {length}")
            ids = ids + [PAD] * (length - len(ids))
        return ids

    def decode(self, ids) -> str:
        words = []
        for tid in ids:
            tid = int(tid)
            if tid == EOS:
                break
            if tid == PAD:
                continue
            words.append(self.word_of(tid))
        out = []
        i = 0
        while i < len(words):
            # two consecutive digit words came from a "(r,c)" cell reference
            if (i + 1 < len(words) and words[i].isdigit() and words[i + 1].isdigit()):
                out.append(f"({words[i]},{words[i + 1]})")
                i += 2
            else:
                out.append(words[i])
                i += 1
        return " ".join(out)

    def object_span(self, ids) -> tuple[int, ...]:
        """The object-description prefix (tokens before the first preposition).

        This is the span the replanning check compares: a color/noun change
        means a new subgoal, while coordinates are ignored.
        """
        stop = {self._ids["to"], self._ids["into"], self._ids["at"], EOS, PAD}
        span = []
        for tid in ids:
            if int(tid) in stop:
                break
            span.append(int(tid))
        return tuple(span)
