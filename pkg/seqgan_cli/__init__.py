"""SeqGAN CLI - Train adversarial sequence generators with policy gradient and evaluate them against an oracle."""

__version__ = "0.1.0"
