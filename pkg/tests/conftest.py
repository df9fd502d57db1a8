from __future__ import annotations

import hypothesis
import pytest

from incompat.catalog import build_card_example, build_urn_example

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=50, derandomize=True
)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def urn():
    return build_urn_example(True)


@pytest.fixture(scope="session")
def urn_plain_colors():
    return build_urn_example(False)


@pytest.fixture(scope="session")
def card():
    return build_card_example(("Spades",))


@pytest.fixture(scope="session")
def deck_replace():
    return build_card_example(("Hearts", "Spades"))


@pytest.fixture(scope="session")
def deck_discard():
    return build_card_example(())
