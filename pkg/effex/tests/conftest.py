"""
Shared fixtures: the example programs shipped in ``programs/``.
"""

from pathlib import Path

import pytest

from effex.core.effex_surface import FILE_EXTENSIONS, SourceFile, parse

PROGRAMS_DIR = Path(__file__).resolve().parents[2] / "programs"


def load_program(name: str) -> SourceFile:
    path = PROGRAMS_DIR / name
    return parse(path.read_text(encoding="utf-8"), FILE_EXTENSIONS[path.suffix])


@pytest.fixture(scope="session")
def programs_dir() -> Path:
    return PROGRAMS_DIR


@pytest.fixture(scope="session")
def program():
    """Parse a program from ``programs/`` by file name."""
    return load_program
