import json
import math

import numpy as np
import pytest

from speech2traj.audio import AudioClip
from speech2traj.dataset import (
    FeatureCache,
    LabelMap,
    label_of,
    make_batches,
    mix_noise,
    scan_dataset,
)
from speech2traj.errors import (
    EmptyDataset,
    MissingSplitLists,
    NoiseTooShort,
    ZeroSignalPower,
)

from synthaudio import make_dataset_tree, write_wav


class TestLabelMap:
    def test_fixed_rows(self, label_map):
        assert label_map.label_of("two").tolist() == [1, 0, 0, 1, 1]
        assert label_map.label_of("one").tolist() == [1, 0, 1, 1, 1]

    def test_unlisted_word_maps_to_zero(self, label_map):
        assert label_of("bed", label_map).tolist() == [0, 0, 0, 0, 0]
        assert label_of("", label_map).tolist() == [0, 0, 0, 0, 0]

    def test_intermediate_values(self):
        lm = LabelMap({"ok": [0.2, 0.7, 0, 0, 0]})
        assert lm.label_of("ok").tolist() == pytest.approx([0.2, 0.7, 0, 0, 0])

    def test_case_and_whitespace_insensitive(self, label_map):
        assert label_map.label_of(" TWO ").tolist() == [1, 0, 0, 1, 1]

    def test_default_must_be_zero(self):
        with pytest.raises(ValueError):
            LabelMap({"__default__": [0, 0, 1, 0, 0]})

    def test_range_validation(self):
        with pytest.raises(ValueError):
            LabelMap({"x": [0, 0, 0, 0, 1.5]})
        with pytest.raises(ValueError):
            LabelMap({"x": [0, 0, 0, 0]})

    def test_from_json(self, tmp_path):
        path = tmp_path / "labels.json"
        path.write_text(json.dumps({"go": [1, 1, 0, 0, 0]}))
        assert LabelMap.from_json(path).label_of("go").tolist() == [1, 1, 0, 0, 0]

    def test_labels_are_copies(self, label_map):
        a = label_map.label_of("two")
        a[0] = 0.0
        assert label_map.label_of("two")[0] == 1.0


class TestScan:
    def test_fixture_tree_exact(self, tmp_path, label_map):
        make_dataset_tree(tmp_path, {"one": 1, "two": 1, "bed": 1},
                          {"one": 1, "bed": 1}, per_word_test={"two": 1})
        manifest = scan_dataset(tmp_path, label_map)
        assert manifest.totals() == {"train": 3, "val1": 2, "val2": 1, "total": 6}
        counts = manifest.counts()
        assert counts["one"] == {"train": 1, "val1": 1, "val2": 0}
        assert counts["two"] == {"train": 1, "val1": 0, "val2": 1}
        assert counts["bed"] == {"train": 1, "val1": 1, "val2": 0}
        assert manifest.command_word_count(label_map, "train") == 2  # one, two
        splits = {e.path for e in manifest.examples}
        assert len(splits) == 6  # disjoint by path

    def test_missing_split_lists(self, tmp_path, label_map):
        (tmp_path / "one").mkdir()
        with pytest.raises(MissingSplitLists):
            scan_dataset(tmp_path, label_map)

    def test_empty_dataset(self, tmp_path, label_map):
        (tmp_path / "validation_list.txt").write_text("")
        (tmp_path / "testing_list.txt").write_text("")
        with pytest.raises(EmptyDataset):
            scan_dataset(tmp_path, label_map)

    def test_background_noise_dir_excluded(self, tmp_path, label_map):
        make_dataset_tree(tmp_path, {"one": 2}, {"one": 1})
        noise_dir = tmp_path / "_background_noise_"
        noise_dir.mkdir()
        write_wav(noise_dir / "hum.wav", np.zeros(32000, np.int16))
        manifest = scan_dataset(tmp_path, label_map)
        assert all(e.word != "_background_noise_" for e in manifest.examples)
        assert manifest.totals()["total"] == 3


class TestBatches:
    @pytest.fixture()
    def small_manifest(self, tmp_path, label_map):
        make_dataset_tree(tmp_path, {"one": 4, "two": 3, "bed": 3}, {"one": 1})
        return scan_dataset(tmp_path, label_map)

    def test_batch_sizes_4_4_2(self, small_manifest, label_map):
        rng = np.random.default_rng(0)
        sizes = [len(f) for f, _ in make_batches(small_manifest, "train", 4, rng, label_map)]
        assert sizes == [4, 4, 2]

    def test_same_seed_same_order(self, small_manifest, label_map):
        cache = FeatureCache()
        a = [lab.tobytes() for _, lab in make_batches(
            small_manifest, "train", 4, np.random.default_rng(5), label_map, cache)]
        b = [lab.tobytes() for _, lab in make_batches(
            small_manifest, "train", 4, np.random.default_rng(5), label_map, cache)]
        assert a == b

    def test_epoch_is_permutation(self, small_manifest, label_map):
        cache = FeatureCache()
        seen = []
        for feats, labels in make_batches(small_manifest, "train", 4,
                                          np.random.default_rng(1), label_map, cache):
            assert feats.shape[1:] == (129, 71, 1)
            assert feats.dtype == np.float32
            seen.extend(f.tobytes() for f in feats)
        expected = [cache.get(e.path)[..., None].astype(np.float32).tobytes()
                    for e in small_manifest.split_examples("train")]
        assert sorted(seen) == sorted(expected)

    def test_batch_size_floor(self, small_manifest, label_map):
        with pytest.raises(ValueError):
            list(make_batches(small_manifest, "train", 1, np.random.default_rng(0), label_map))


class TestMixNoise:
    def _sine_clip(self):
        # amplitude low enough that signal + mixed noise never saturates
        t = np.arange(16000) / 16000.0
        return AudioClip(np.round(12000 * np.sin(2 * np.pi * 440 * t)).astype(np.int16))

    def test_snr_within_tenth_db(self):
        rng = np.random.default_rng(0)
        clip = self._sine_clip()
        noise = rng.normal(0, 800, 48000).astype(np.int16)
        mixed = mix_noise(clip, noise, 10.0, np.random.default_rng(1))
        added = mixed.samples.astype(np.float64) - clip.samples.astype(np.float64)
        ps = np.mean(clip.samples.astype(np.float64) ** 2)
        pn = np.mean(added**2)
        measured_db = 10 * math.log10(ps / pn)
        assert abs(measured_db - 10.0) <= 0.1

    def test_infinite_snr_is_identity(self):
        clip = self._sine_clip()
        noise = np.ones(16000, np.int16) * 500
        mixed = mix_noise(clip, noise, math.inf, np.random.default_rng(0))
        assert np.array_equal(mixed.samples, clip.samples)

    def test_silent_clip_rejected(self):
        clip = AudioClip(np.zeros(16000, np.int16))
        with pytest.raises(ZeroSignalPower):
            mix_noise(clip, np.ones(16000, np.int16), 10.0, np.random.default_rng(0))

    def test_short_noise_rejected(self):
        with pytest.raises(NoiseTooShort):
            mix_noise(self._sine_clip(), np.ones(8000, np.int16), 10.0,
                      np.random.default_rng(0))

    def test_output_saturates_int16(self):
        clip = AudioClip(np.full(16000, 30000, np.int16))
        noise = np.full(16000, 20000, np.int16)
        mixed = mix_noise(clip, noise, 0.0, np.random.default_rng(0))
        assert mixed.samples.max() <= 32767
        assert mixed.samples.dtype == np.int16
