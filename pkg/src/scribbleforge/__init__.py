"""Scribble-guided image editing toolkit.

Builds editing supervision from layered images and rendered text, composes
multi-task training tuples by mosaicking, trains a toy velocity model under
an edit-focused flow objective, and scores text-editing outputs with a
judge-prompt harness. A FastAPI service exposes the human-review workflow
and batch jobs; the ``forge`` CLI is a thin client for it.
"""

__version__ = "0.1.0"
