"""docpipe: an offline document-intelligence pipeline engine.

Splits multi-document packets into classed sections, extracts schema-defined
attributes through pluggable backends, routes low-confidence results to human
review, validates business rules, and scores every stage with a structured-
comparison evaluation framework.
"""

__version__ = "0.1.0"
