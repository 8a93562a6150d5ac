"""Test suite for seqgan-cli."""
