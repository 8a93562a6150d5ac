"""Command modules for SeqGAN CLI."""
