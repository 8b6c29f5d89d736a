import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import synth  # noqa: E402


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory) -> synth.CorpusTruth:
    """The 3-asset synthetic corpus (11 s, 95 s, 3600 s)."""
    root = tmp_path_factory.mktemp("corpus")
    return synth.make_corpus(root)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory) -> synth.CorpusTruth:
    """A quick corpus for tests that exercise plumbing, not scale."""
    root = tmp_path_factory.mktemp("small-corpus")
    return synth.make_corpus(
        root, {"x_one.wav": 8.0, "y_two.wav": 35.0}
    )


@pytest.fixture()
def dictionary_file(tmp_path) -> Path:
    words = sorted(set(synth.WORD_POOL) | {"evening", "good", "checks", "out", "drive",
                                           "safe", "here", "go", "wait", "in", "have",
                                           "a", "night", "everything"})
    path = tmp_path / "words.txt"
    path.write_text("\n".join(words) + "\n", encoding="utf-8")
    return path
