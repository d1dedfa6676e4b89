"""Workbench for robust-property-preservation secure-compilation criteria.

A typed source language, a dynamically checked target language, the
type-erasing compiler between them, two back-translations (context-based
universal embedding and trace-tree based), an event-based trace model with
safety/dense property classes, bounded criterion checkers, and the classic
counterexample compilation chains as runnable demos.
"""

__version__ = "0.1.0"
