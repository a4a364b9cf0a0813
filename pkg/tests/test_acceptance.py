"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
happen. The two dataset-bound criteria use the official speech-commands
tree when S2T_DATASET points at it; the desk-scale one otherwise falls
back to a synthetic 2,000-utterance corpus with the same shape. The full
reproduction run (hours) only starts when S2T_FULL_TRAIN=1.
"""

import math
import os
import numpy as np
import pytest

from synthaudio import COMMAND_WORDS, FILLER_WORDS, make_dataset_tree

DATASET_ENV = "S2T_DATASET"
FULL_TRAIN_ENV = "S2T_FULL_TRAIN"

TABLE_SPLIT_TOTALS = {"train": 84_843, "val1": 9_981, "val2": 11_005, "total": 105_829}
TABLE_COMMAND_TRAIN = 22_750


def check(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def test_a01_parameter_count_exactness():
    from speech2traj.model import NetworkSpec, build_network, describe

    net = build_network(NetworkSpec(filters2=256))
    per_layer = [row[-1] for row in net.layer_table()]
    expected = [0, 568, 0, 32, 71936, 0, 1024, 0, 98368, 0, 325]
    text = describe(NetworkSpec(filters2=256))
    check("parameter-count exactness",
          per_layer == expected
          and net.trainable_param_count() == 171_725
          and net.stored_param_count() == 172_253
          and "171,725" in text,
          f"per-layer {per_layer}, trainable {net.trainable_param_count()}")


def test_a02_shape_chain_exactness():
    from speech2traj.model import NetworkSpec, build_network

    chain = build_network(NetworkSpec(filters2=256)).shape_chain()
    expected = [(129, 71, 1), (120, 65, 8), (17, 13, 8), (17, 13, 8), (11, 9, 256),
                (2, 3, 256), (2, 3, 256), (1536,), (64,), (64,), (5,)]
    check("shape-chain exactness", chain == expected, str(chain))


def test_a03_gradient_checks():
    from speech2traj.nn.gradcheck import TOLERANCE, check_all

    results = check_all(seed=0)
    worst = max(results.values())
    check("gradient checks", worst < TOLERANCE,
          ", ".join(f"{k} {v:.1e}" for k, v in results.items()))


def test_a04_feature_oracle():
    from speech2traj.audio import AudioClip
    from speech2traj.features import EPSILON, HOP, SEGMENT, feature_of, spectrogram
    from test_features import direct_dft_power

    t = np.arange(16000) / 16000.0
    sine = AudioClip(np.round(32000 * np.sin(2 * np.pi * 1000.0 * t)).astype(np.int16))
    spec = spectrogram(sine)
    argmax_ok = bool(np.all(spec.argmax(axis=0) == 16))

    rng = np.random.default_rng(0)
    noise_samples = rng.integers(-20000, 20000, 16000).astype(np.int16)
    noise_spec = spectrogram(AudioClip(noise_samples))
    frame = noise_samples[5 * HOP : 5 * HOP + SEGMENT]
    oracle = direct_dft_power(frame)
    dft_rel = float(np.abs(noise_spec[:, 5] - oracle).max() / np.abs(oracle).max())

    zero_feat = feature_of(AudioClip(np.zeros(16000, np.int16)))
    zero_ok = bool(np.allclose(zero_feat, math.log(EPSILON), atol=1e-5))

    check("feature oracle", argmax_ok and dft_rel <= 1e-6 and zero_ok,
          f"argmax16 {argmax_ok}, dft rel {dft_rel:.2e}, zero-clip {zero_ok}")


@pytest.mark.slow
def test_a05_overfit_oracle(eight_word_dir, label_map, tmp_path):
    from speech2traj.checkpoint import load_checkpoint
    from speech2traj.dataset import scan_dataset
    from speech2traj.training import TrainConfig, evaluate_network, train

    manifest = scan_dataset(eight_word_dir, label_map)
    config = TrainConfig(filters2=256, epochs=500, batch_size=8, dropout_rate=0.0,
                         lr=1e-4, rng_seed=0, out_dir=tmp_path)
    _, report = train(config, manifest, label_map)
    final_train_rmse = report.rows[-1].train_rmse
    network, _ = load_checkpoint(tmp_path / "last.ckpt")
    _, eval_rmse, _ = evaluate_network(network, manifest, "train", label_map)
    check("overfit oracle", final_train_rmse < 0.05 and eval_rmse < 0.05,
          f"final train RMSE {final_train_rmse:.4f}, checkpoint eval {eval_rmse:.4f}")


def _stratified_subset(manifest, per_word_train, per_word_val, rng):
    from speech2traj.dataset import DatasetManifest

    out = DatasetManifest(root=manifest.root)
    by_word_split = {}
    for e in manifest.examples:
        by_word_split.setdefault((e.word, e.split), []).append(e)
    for (word, split), pool in sorted(by_word_split.items(), key=lambda kv: kv[0]):
        want = per_word_train.get(word, 0) if split == "train" else \
               per_word_val.get(word, 0) if split == "val1" else 0
        take = min(want, len(pool))
        idx = rng.choice(len(pool), size=take, replace=False)
        out.examples.extend(pool[i] for i in sorted(idx))
    return out


@pytest.mark.slow
def test_a06_desk_scale_training(label_map, tmp_path):
    from speech2traj.dataset import scan_dataset
    from speech2traj.training import TrainConfig, train

    dataset_root = os.environ.get(DATASET_ENV)
    rng = np.random.default_rng(0)
    if dataset_root:
        full = scan_dataset(dataset_root, label_map)
        per_train = {w: 190 for w in label_map.words}
        per_val = {w: 28 for w in label_map.words}
        # pad with non-command words to reach ~2000
        others = sorted({e.word for e in full.examples} - set(label_map.words))[:4]
        per_train |= {w: 60 for w in others}
        per_val |= {w: 4 for w in others}
        manifest = _stratified_subset(full, per_train, per_val, rng)
    else:
        root = tmp_path / "synthetic2000"
        make_dataset_tree(root,
                          {w: 190 for w in COMMAND_WORDS} | {w: 60 for w in FILLER_WORDS},
                          {w: 28 for w in COMMAND_WORDS} | {w: 4 for w in FILLER_WORDS},
                          seed=11)
        manifest = scan_dataset(root, label_map)

    n = manifest.totals()["total"]
    config = TrainConfig(filters2=128, epochs=30, batch_size=64, rng_seed=0,
                         out_dir=tmp_path / "run")
    _, report = train(config, manifest, label_map)
    epoch1 = report.rows[0].val_rmse
    best = report.best_val_rmse
    check("desk-scale training", best < 0.35 and best < epoch1,
          f"{n} utterances, epoch-1 val RMSE {epoch1:.3f}, best {best:.3f} "
          f"at epoch {report.best_epoch}")


def test_a07_full_reproduction(label_map, tmp_path):
    dataset_root = os.environ.get(DATASET_ENV)
    if not (dataset_root and os.environ.get(FULL_TRAIN_ENV) == "1"):
        print("[SKIP] full reproduction (extended): set "
              f"{DATASET_ENV} and {FULL_TRAIN_ENV}=1 to run the full-dataset "
              "filters2=256 100-epoch training (hours)")
        pytest.skip("extended run not requested")
    from speech2traj.dataset import scan_dataset
    from speech2traj.training import TrainConfig, train

    manifest = scan_dataset(dataset_root, label_map)
    config = TrainConfig(filters2=256, epochs=100, batch_size=64, rng_seed=0,
                         out_dir=tmp_path / "full")
    _, report = train(config, manifest, label_map)
    check("full reproduction", report.best_val_rmse <= 0.15,
          f"best val RMSE {report.best_val_rmse:.4f} (published target 0.119)")


def test_a08_latency_budget():
    from speech2traj.model import NetworkSpec, build_network
    from speech2traj.runtime import InferenceEngine

    engine = InferenceEngine(build_network(NetworkSpec(filters2=256), rng_seed=0))
    stats = engine.bench(iterations=100, seed=0)
    check("latency budget", stats["p95_ms"] < 50.0,
          f"p95 {stats['p95_ms']:.1f} ms, mean {stats['mean_ms']:.1f} ms "
          "(published embedded-target range 20-40 ms)")


def test_a09_checkpoint_round_trip(tmp_path):
    from speech2traj.checkpoint import load_checkpoint, save_checkpoint
    from speech2traj.errors import ChecksumMismatch
    from speech2traj.model import NetworkSpec, build_network

    net = build_network(NetworkSpec(filters2=64), rng_seed=3)
    x = np.random.default_rng(0).standard_normal((4, 129, 71, 1)).astype(np.float32)
    net.forward_batch(x, training=True)
    path_a = tmp_path / "a.ckpt"
    path_b = tmp_path / "b.ckpt"
    save_checkpoint(net, {"epoch": 1, "best_val_mse": 0.5, "rng_seed": 3}, path_a)
    loaded, metadata = load_checkpoint(path_a)
    save_checkpoint(loaded, metadata, path_b)
    identical = path_a.read_bytes() == path_b.read_bytes()

    corrupted = bytearray(path_a.read_bytes())
    corrupted[len(corrupted) // 2] ^= 0x01
    path_a.write_bytes(bytes(corrupted))
    try:
        load_checkpoint(path_a)
        detected = False
    except ChecksumMismatch:
        detected = True
    check("checkpoint round-trip", identical and detected,
          f"byte-identical {identical}, single-byte corruption detected {detected}")


def test_a10_loss_identities():
    from speech2traj.nn import mse_loss, rmse

    rng = np.random.default_rng(0)
    mse, _ = mse_loss(rng.uniform(0, 1, (32, 5)), rng.uniform(0, 1, (32, 5)))
    identity_ok = abs(rmse(mse) ** 2 - mse) < 1e-12

    desired = np.array([[1.0, 0.0, 1.0, 1.0, 1.0]])
    inferred = np.array([[0.979, 0.0, 0.983, 0.983, 0.986]])
    reported_mse, _ = mse_loss(desired, inferred)
    hand = (0.021**2 + 0.0**2 + 0.017**2 + 0.017**2 + 0.014**2) / 5.0
    example_ok = (abs(reported_mse - hand) < 1e-15
                  and abs(rmse(reported_mse) - 0.0156) < 5e-5)
    check("loss identities", identity_ok and example_ok,
          f"rmse^2==mse {identity_ok}, example RMSE {rmse(reported_mse):.6f}")


def test_a11_controller_properties():
    from speech2traj.controller import simulate

    rng = np.random.default_rng(0)
    events = [(0.25 * i, rng.uniform(0, 1, 5)) for i in range(8)]
    _, _, pos = simulate(events, duration_s=3.0)
    bounded = bool(np.all(pos >= 0) and np.all(pos <= 1))

    worst_err = 0.0
    for r in (0.05, 0.4, 0.8, 1.0):
        _, ref, p = simulate([(0.0, [r] * 5)], duration_s=2.0)
        worst_err = max(worst_err, float(np.abs(p[-1] - ref[-1]).max()))

    _, _, step_pos = simulate([(0.0, [1.0] * 5)], duration_s=1.0, tau_s=0.05, dt_s=0.01)
    max_delta = float(np.abs(np.diff(step_pos, axis=0)).max())
    rate_ok = max_delta <= 0.01 / 0.05 + 1e-12
    check("controller properties", bounded and worst_err < 1e-3 and rate_ok,
          f"bounded {bounded}, steady-state err {worst_err:.1e}, "
          f"max step {max_delta:.4f} <= dt/tau 0.2")


def test_a12_service_loopback(fixture_engine, fixtures_dir):
    from fastapi.testclient import TestClient

    from speech2traj.audio import AudioClip, read_wav
    from speech2traj.service import create_app
    from test_service import stream_samples, wait_for_trajectory

    clip = read_wav(fixtures_dir / "two_16k.wav")
    silence = AudioClip(np.zeros(16000, np.int16))
    expected_two = fixture_engine.infer_clip(clip).to_dict()["trajectory"]
    expected_silence = fixture_engine.infer_clip(silence).to_dict()["trajectory"]

    app = create_app(fixture_engine, period_ms=50.0)
    with TestClient(app) as tc:
        with tc.websocket_connect("/stream") as ws:
            stream_samples(ws, clip.samples)
            event = wait_for_trajectory(ws, expected_two)
        loopback_ok = event["trajectory"] == expected_two
        with tc.websocket_connect("/stream") as ws_a, \
                tc.websocket_connect("/stream") as ws_b:
            stream_samples(ws_a, clip.samples)
            stream_samples(ws_b, silence.samples)
            a = wait_for_trajectory(ws_a, expected_two)
            b = wait_for_trajectory(ws_b, expected_silence)
        isolation_ok = (a["trajectory"] == expected_two
                        and b["trajectory"] == expected_silence)
    check("service loopback", loopback_ok and isolation_ok,
          f"loopback exact {loopback_ok}, isolation {isolation_ok}")


def test_a13_dataset_accounting(label_map):
    dataset_root = os.environ.get(DATASET_ENV)
    if not dataset_root:
        print(f"[SKIP] dataset accounting: set {DATASET_ENV} to the official "
              "speech-commands root to verify the published split totals "
              f"{TABLE_SPLIT_TOTALS} and command-word train count {TABLE_COMMAND_TRAIN}")
        pytest.skip("official dataset not available")
    from speech2traj.dataset import format_counts_report, scan_dataset

    manifest = scan_dataset(dataset_root, label_map)
    totals = manifest.totals()
    command_train = manifest.command_word_count(label_map, "train")
    print(format_counts_report(manifest, label_map))
    matches = totals == TABLE_SPLIT_TOTALS and command_train == TABLE_COMMAND_TRAIN
    if not matches:
        print(f"[NOTE] counts differ from the published table: {totals}, "
              f"command-word train {command_train} (snapshot mismatches are "
              "reported, not fatal)")
    check("dataset accounting", totals["total"] > 0,
          f"published-table match: {matches}; scanned {totals['total']} utterances")
