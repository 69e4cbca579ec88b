"""Discrete and continuous visual interfaces, text and coordinate codecs."""

from .codebook import BadDimensions, Codebook, UnknownToken, build_codebook
from .coords import CoordCodec, OutOfBounds
from .patches import PatchEmbedder
from .prompt import build_prompt_image
from .text import EOS, PAD, UnknownWord, V_TXT, Vocab

__all__ = [
    "Codebook", "build_codebook", "UnknownToken", "BadDimensions",
    "CoordCodec", "OutOfBounds", "Vocab", "UnknownWord", "V_TXT",
    "PAD", "EOS", "PatchEmbedder", "build_prompt_image",
]
