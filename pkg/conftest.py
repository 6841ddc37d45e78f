"""
Pytest configuration for the HSIEM test suite
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project paths
project_root = Path(__file__).parent
src_path = project_root / "src"
sys.path.insert(0, str(src_path))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
