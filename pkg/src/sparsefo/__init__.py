"""First-order model checking and quantifier elimination on sparse
structures: tree-rank analysis, the batched splitter game, forest and
bounded-expansion QE pipelines, and lower-bound graph-to-forest encoders."""

__version__ = "0.1.0"
