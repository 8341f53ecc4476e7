"""Rossify - recuperação do núcleo de preços em modelos markovianos."""

__version__ = "0.1.0"
