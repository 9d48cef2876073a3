"""
Utility Module for the HO Semantics Workbench

This module provides common helpers used by the command-line front end:

- Logging setup (one stderr handler on the package logger)
- Banners for the human-readable report
- Writing and reading the JSON documents the commands exchange
"""

import json
import logging
import sys

PACKAGE_LOGGER = "ho_semantics"
BANNER_WIDTH = 60


def setup_logging(verbose=False, stream=None):
    """
    Install a single stderr handler on the package logger.

    Parameters:
    -----------
    verbose : bool
        DEBUG when True, INFO otherwise
    stream : file, optional
        Where log records go; defaults to ``sys.stderr`` at call time

    Returns:
    --------
    logging.Logger
        The package logger
    """
    logger = logging.getLogger(PACKAGE_LOGGER)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(stream if stream is not None else sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False
    return logger


def banner(title):
    """The boxed title used at the top of text reports."""
    rule = "=" * BANNER_WIDTH
    return f"{rule}\n{title.center(BANNER_WIDTH)}\n{rule}"


def dump_document(document):
    """Serialize one machine document; the same document always gives the same text."""
    return json.dumps(document, ensure_ascii=False, sort_keys=True)


def read_document(path):
    """Load a JSON document written by ``dump_document``."""
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
