"""
테스트 공통 설정 - 설치하지 않은 체크아웃에서도 imc_pack 으로 import 한다
"""
import importlib.util
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]

try:
    import imc_pack  # noqa: F401

    INSTALLED = True
except ImportError:
    _spec = importlib.util.spec_from_file_location(
        "imc_pack", ROOT / "__init__.py", submodule_search_locations=[str(ROOT)]
    )
    _module = importlib.util.module_from_spec(_spec)
    sys.modules["imc_pack"] = _module
    _spec.loader.exec_module(_module)
    INSTALLED = False

from imc_pack.architecture import load_architecture  # noqa: E402
from imc_pack.workload import load_workload  # noqa: E402


@pytest.fixture
def dimc():
    return load_architecture("dimc22")


@pytest.fixture
def aimc():
    return load_architecture("aimc28")


@pytest.fixture
def ds_cnn():
    return load_workload("ds_cnn")


@pytest.fixture
def autoencoder():
    return load_workload("autoencoder")


@pytest.fixture
def home(tmp_path, monkeypatch):
    """설정/캐시 디렉토리를 임시 경로로"""
    path = tmp_path / "home"
    monkeypatch.setenv("IMC_PACK_HOME", str(path))
    return path
