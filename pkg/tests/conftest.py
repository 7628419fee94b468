import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
sys.path.insert(0, str(Path(__file__).resolve().parent))

from lharv.textio import parse_model, parse_pathset, parse_spec  # noqa: E402


def load(model, paths=None, spec=None):
    """Parsed (network, path set, spec) of fixture files given by stem."""
    paths = paths or model
    net = parse_model((FIXTURES / f"{model}.lharv").read_text(), f"{model}.lharv")
    ps = parse_pathset((FIXTURES / f"{paths}.paths").read_text(), net, f"{paths}.paths")
    sp = parse_spec((FIXTURES / f"{spec}.spec").read_text(), net, f"{spec}.spec") if spec else None
    return net, ps, sp


@pytest.fixture
def relay():
    return load("relay", "relay", "relay")
