"""Algorithmic-complexity benchmark toolkit for sequence-compression tests."""
