import pathlib

import pytest

SCENES = pathlib.Path(__file__).parent / "scenes"


@pytest.fixture
def scenes_dir():
    return SCENES


def scene_text(name: str) -> str:
    return (SCENES / f"{name}.json").read_text()
