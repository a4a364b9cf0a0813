import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixtureutil import build_fixtures  # noqa: E402
from synthaudio import COMMAND_WORDS, word_wave, write_wav  # noqa: E402

FIXTURES_DIR = Path(__file__).parent.parent / "var" / "fixtures"


@pytest.fixture(scope="session")
def label_map():
    from speech2traj.dataset import LabelMap

    return LabelMap.default()


@pytest.fixture(scope="session")
def fixtures_dir():
    """Trained 32-filter checkpoint plus reference WAVs, cached on disk."""
    return build_fixtures(FIXTURES_DIR, log=lambda *_: None)


@pytest.fixture(scope="session")
def fixture_engine(fixtures_dir):
    from speech2traj.runtime import InferenceEngine

    return InferenceEngine.from_checkpoint(fixtures_dir / "best.ckpt")


@pytest.fixture(scope="session")
def eight_word_dir(tmp_path_factory):
    """One clean utterance per command word in train, one jittered per
    word in val1 (the training loop needs a non-empty validation split)."""
    root = tmp_path_factory.mktemp("eightwords")
    rng = np.random.default_rng(7)
    val_lines = []
    for word in COMMAND_WORDS:
        word_dir = root / word
        word_dir.mkdir()
        write_wav(word_dir / f"{word}_train.wav", word_wave(word))
        val_name = f"{word}_val.wav"
        write_wav(word_dir / val_name, word_wave(word, rng))
        val_lines.append(f"{word}/{val_name}")
    (root / "validation_list.txt").write_text("\n".join(val_lines) + "\n")
    (root / "testing_list.txt").write_text("")
    return root
