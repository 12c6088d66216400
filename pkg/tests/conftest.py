import pytest


@pytest.fixture(autouse=True)
def _quiet_cdal(monkeypatch, tmp_path):
    # No diagnostics and no writes into the repo during unit tests
    monkeypatch.setenv("CDAL_LOG", "off")
    monkeypatch.setenv("CDAL_OUTPUT_DIR", (tmp_path / "results").as_posix())
