"""Access to versioned data files shipped with the package."""

from importlib import resources
from pathlib import Path


def data_path(name: str) -> Path:
    return Path(str(resources.files("pgce").joinpath("data", name)))


def read_data_text(name: str) -> str:
    return resources.files("pgce").joinpath("data", name).read_text(encoding="utf-8")
