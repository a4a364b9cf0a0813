"""Single entry point: train, eval, infer, describe, bench, gradcheck,
simulate, serve.

Exit codes: 0 success, 1 usage error, 2 data error (bad files, formats,
datasets), 3 internal fault. Every flag can also come from an S2T_*
environment variable (flags win). Heavy imports happen inside commands so
--threads can cap the BLAS pool before numpy loads.
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import __version__
from .errors import DataError, InvalidConfig


def _cap_threads(n: int | None):
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


@click.group(context_settings={"auto_envvar_prefix": "S2T"})
@click.version_option(__version__, prog_name="s2t")
@click.option("--threads", type=int, default=None, help="Cap worker/BLAS threads.")
def cli(threads):
    _cap_threads(threads)


@cli.command()
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Dataset root (word dirs plus split list files).")
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Label-map JSON; defaults to the built-in table.")
@click.option("--filters", "filters2", type=click.Choice(["32", "64", "128", "256"]),
              default="256", help="Second convolution filter count.")
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--batch-size", type=int, default=64, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--dropout", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--augment/--no-augment", default=False,
              help="Mix background noise from _background_noise_ into training clips.")
@click.option("--command-words-only", is_flag=True, default=False,
              help="Train only on words present in the label map.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Output directory for best.ckpt, last.ckpt, report.csv.")
def train(data_dir, labels_path, filters2, epochs, batch_size, lr, dropout, seed,
          augment, command_words_only, out_dir):
    """Train on a dataset directory and keep the best-validation checkpoint."""
    from pathlib import Path

    from .dataset import NOISE_DIR, LabelMap, scan_dataset
    from .training import TrainConfig, train as run_train

    label_map = LabelMap.from_json(labels_path) if labels_path else LabelMap.default()
    manifest = scan_dataset(data_dir, label_map)
    noise_clips = []
    if augment:
        for wav in sorted((Path(data_dir) / NOISE_DIR).glob("*.wav")):
            with open(wav, "rb") as fh:
                noise_clips.append(_read_long_wav(fh.read()))
        if not noise_clips:
            raise InvalidConfig(f"--augment set but no WAVs in {NOISE_DIR}/")
    config = TrainConfig(filters2=int(filters2), epochs=epochs, batch_size=batch_size,
                         lr=lr, dropout_rate=dropout, rng_seed=seed, augment=augment,
                         noise_clips=noise_clips, command_words_only=command_words_only,
                         out_dir=Path(out_dir))
    best_path, report = run_train(config, manifest, label_map, log=click.echo)
    click.echo(f"best epoch {report.best_epoch}: val RMSE {report.best_val_rmse:.4f}")
    click.echo(f"checkpoint: {best_path}")


def _read_long_wav(data: bytes):
    """Background-noise files exceed one second; pull their full payload."""
    import struct

    import numpy as np

    from .errors import MalformedContainer

    if data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedContainer("noise file is not RIFF/WAVE")
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        pos += 8
        if cid == b"data":
            return np.frombuffer(data[pos : pos + size], dtype="<i2")
        pos += size + (size & 1)
    raise MalformedContainer("noise file has no data chunk")


@cli.command("eval")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--split", type=click.Choice(["train", "val1", "val2"]), default="val1",
              show_default=True)
def eval_cmd(checkpoint, data_dir, labels_path, split):
    """Evaluate a checkpoint over one dataset split."""
    from .checkpoint import load_checkpoint
    from .dataset import LabelMap, scan_dataset
    from .training import evaluate_network

    label_map = LabelMap.from_json(labels_path) if labels_path else LabelMap.default()
    manifest = scan_dataset(data_dir, label_map)
    network, _ = load_checkpoint(checkpoint)
    mse, rmse_val, per_word = evaluate_network(network, manifest, split, label_map)
    click.echo(f"{split}: MSE {mse:.6f}  RMSE {rmse_val:.6f}")
    click.echo(f"{'word':<16}{'rmse':>10}{'count':>8}")
    for word, (_, wr, n) in per_word.items():
        click.echo(f"{word:<16}{wr:>10.4f}{n:>8}")


@cli.command()
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--wav", "wav_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dump-feature", "dump_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the 129x71 feature as a text matrix.")
def infer(checkpoint, wav_path, dump_path):
    """Run one WAV through the engine; prints the event as JSON."""
    from .audio import read_wav
    from .features import feature_of, save_feature_text
    from .runtime import InferenceEngine

    engine = InferenceEngine.from_checkpoint(checkpoint)
    clip = read_wav(wav_path)
    if dump_path:
        save_feature_text(feature_of(clip), dump_path)
    event = engine.infer_clip(clip)
    click.echo(json.dumps(event.to_dict()))


@cli.command()
@click.option("--filters", "filters2", type=click.Choice(["32", "64", "128", "256"]),
              default="256", help="Second convolution filter count.")
@click.option("--dropout", type=float, default=0.5, show_default=True)
def describe(filters2, dropout):
    """Print the layer table with parameter counts."""
    from .model import NetworkSpec, describe as describe_network

    click.echo(describe_network(NetworkSpec(filters2=int(filters2), dropout_rate=dropout)))


@cli.command()
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Checkpoint to benchmark; omit for a fresh random network.")
@click.option("--filters", "filters2", type=click.Choice(["32", "64", "128", "256"]),
              default="256", help="Filter count when no checkpoint is given.")
@click.option("--iterations", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def bench(checkpoint, filters2, iterations, seed):
    """Measure feature+forward latency over repeated runs."""
    from .model import NetworkSpec, build_network
    from .runtime import InferenceEngine

    if checkpoint:
        engine = InferenceEngine.from_checkpoint(checkpoint)
    else:
        engine = InferenceEngine(build_network(NetworkSpec(filters2=int(filters2)),
                                               rng_seed=seed))
    stats = engine.bench(iterations=iterations, seed=seed)
    click.echo(f"iterations: {stats['iterations']}")
    for key in ("mean_ms", "p50_ms", "p95_ms", "max_ms"):
        click.echo(f"{key}: {stats[key]:.2f}")


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True)
def gradcheck(seed):
    """Finite-difference check of every kernel's backward pass."""
    from .nn.gradcheck import TOLERANCE, check_all

    results = check_all(seed)
    worst = 0.0
    for name, err in results.items():
        click.echo(f"{name:<12} max relative error {err:.3e}")
        worst = max(worst, err)
    if worst >= TOLERANCE:
        raise click.ClickException(f"gradient check failed: {worst:.3e} >= {TOLERANCE}")
    click.echo(f"all kernels below {TOLERANCE}")


@cli.command()
@click.option("--events", "events_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON-lines file of trajectory events ({'t_s':..,'trajectory':[..]}).")
@click.option("--duration", "duration_s", type=float, default=5.0, show_default=True)
@click.option("--kp", type=float, default=2.0, show_default=True)
@click.option("--ki", type=float, default=15.0, show_default=True)
@click.option("--tau", "tau_s", type=float, default=0.05, show_default=True)
@click.option("--dt", "dt_s", type=float, default=0.01, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def simulate(events_path, duration_s, kp, ki, tau_s, dt_s, out_path):
    """Drive the simulated hand controllers from recorded events."""
    from .controller import simulate as run_sim, write_simulation_csv

    events = []
    with open(events_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                events.append((float(obj["t_s"]), obj["trajectory"]))
    t, ref, pos = run_sim(events, duration_s, kp=kp, ki=ki, tau_s=tau_s, dt_s=dt_s)
    write_simulation_csv(out_path, t, ref, pos)
    click.echo(f"wrote {len(t)} samples to {out_path}")


@cli.command()
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--period-ms", type=float, default=200.0, show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Also serve a built browser client from this directory.")
def serve(checkpoint, host, port, period_ms, ui_dir):
    """Run the live websocket demo service."""
    from .service import serve as run_serve

    run_serve(checkpoint, host=host, port=port, period_ms=period_ms, ui_dir=ui_dir)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except InvalidConfig as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # noqa: BLE001 - the contract maps faults to 3
        click.echo(f"internal error: {exc.__class__.__name__}: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
