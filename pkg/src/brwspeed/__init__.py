"""Spreading speeds and count-growth rates of reducible multitype branching random walks."""

__version__ = "0.1.0"
