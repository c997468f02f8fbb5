"""Next-word recommendation with count-based, neural and hybrid language models."""

from .core import Distribution, LanguageModel, next_distribution, top_k

__version__ = "0.1.0"
__all__ = ["Distribution", "LanguageModel", "next_distribution", "top_k"]
