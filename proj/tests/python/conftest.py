import os
import shutil

import pytest


@pytest.fixture(scope="session")
def tsh_cli():
    path = os.environ.get("TSH_CLI") or shutil.which("tsh")
    if not path:
        pytest.skip("tsh command line tool not found (set TSH_CLI)")
    return path
