"""Command-line surface: data generation, fitting, spectra, prediction, benchmarks.

Subcommands: simulate | fit-stream | fit-batch | predict | sweep-delta | bench | eig.
Options may come from a JSON config file (--config) with flags overriding it.
Logs go to stderr, data to the requested files. Exit codes: 0 success,
1 usage/config error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np
from scipy.linalg import LinAlgError

from . import datagen, spectral, storage
from .dictionary import Dictionary, centers_from_data, make_linear, make_rbf, median_gamma
from .koopman import KoopmanModel, KoopmanStream, fit_batch_pinv, fit_batch_ridge
from .predictor import Predictor, evaluate_horizon, fit_projection, mse
from .spectral import NumericalFailure

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract wants 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _gamma_arg(text: str):
    if text == "median":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("gamma must be a number or 'median'")
    return value


def _float_list(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers")


def _int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers")


# Keys a JSON config file may set, with the converter applied to each value.
_CONFIG_SCHEMA = {
    "seed": int,
    "delta": float,
    "dict": str,
    "rbf_count": int,
    "gamma": lambda v: None if v in (None, "median") else float(v),
    "include_state": bool,
    "centers_source": str,
    "cadence": int,
    "dominant": int,
    "input": str,
    "output": str,
}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    unknown = sorted(set(raw) - set(_CONFIG_SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    config = {}
    for key, value in raw.items():
        try:
            config[key] = _CONFIG_SCHEMA[key](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from exc
    if config.get("centers_source", "data") != "data":
        raise ConfigError("centers_source: only 'data' is supported")
    return config


def _add_dictionary_args(sub):
    sub.add_argument("--dict", dest="dict", default="rbf", choices=["linear", "rbf"],
                     help="observable dictionary kind")
    sub.add_argument("--rbf-count", dest="rbf_count", type=int, default=150,
                     help="number of Gaussian RBF centers (rbf dictionary)")
    sub.add_argument("--gamma", type=_gamma_arg, default=None,
                     help="RBF inverse squared width, or 'median' (default)")
    sub.add_argument("--include-state", dest="include_state",
                     action=argparse.BooleanOptionalAction, default=True,
                     help="prepend the raw state to the RBF block")
    sub.add_argument("--centers-source", dest="centers_source", default="data",
                     choices=["data"], help="where RBF centers come from")


def _add_common_args(sub):
    sub.add_argument("--seed", type=int, default=0, help="master seed")
    sub.add_argument("--delta", type=float, default=1e-4,
                     help="streaming initialization parameter (phi_0 = delta I)")


def build_parser() -> _Parser:
    parser = _Parser(prog="redmd", description=__doc__)
    parser.add_argument("--config", default=None, help="JSON config file with defaults")
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", parents=[], help="generate a trajectory CSV")
    _add_common_args(sim)
    sim.add_argument("--system", choices=["linear", "swing"], default="linear")
    sim.add_argument("--n", type=int, default=20, help="state dimension (linear system)")
    sim.add_argument("--radius", type=float, default=0.95, help="target spectral radius")
    sim.add_argument("--steps", type=int, default=1000)
    sim.add_argument("--dt", type=float, default=0.01, help="sampling period")
    sim.add_argument("--noise-std", dest="noise_std", type=float, default=0.0)
    sim.add_argument("--x0-scale", dest="x0_scale", type=float, default=1.0)
    sim.add_argument("--angle-std", dest="angle_std", type=float, default=0.3,
                     help="swing: stddev of the initial angle perturbation")
    sim.add_argument("--freq-std", dest="freq_std", type=float, default=0.1,
                     help="swing: stddev of the initial frequency perturbation")
    sim.add_argument("--out", dest="output", required=True)
    sim.add_argument("--truth-out", dest="truth_out", default=None,
                     help="sidecar JSON with the true eigenvalues (linear system)")
    sim.set_defaults(func=cmd_simulate)

    fits = commands.add_parser("fit-stream", help="streaming fit with eigenvalue cadence")
    _add_common_args(fits)
    _add_dictionary_args(fits)
    fits.add_argument("--input", required=True, help="trajectory CSV")
    fits.add_argument("--cadence", type=int, default=50,
                      help="report dominant eigenvalues every m samples")
    fits.add_argument("--dominant", type=int, default=10,
                      help="how many dominant eigenvalues to report")
    fits.add_argument("--model-out", dest="model_out", required=True)
    fits.add_argument("--eig-out", dest="eig_out", default=None,
                      help="eigenvalue-trajectory CSV")
    fits.set_defaults(func=cmd_fit_stream)

    fitb = commands.add_parser("fit-batch", help="one-shot batch fit")
    _add_common_args(fitb)
    _add_dictionary_args(fitb)
    fitb.add_argument("--input", required=True)
    fitb.add_argument("--solver", choices=["ridge", "pinv"], default="ridge")
    fitb.add_argument("--model-out", dest="model_out", required=True)
    fitb.set_defaults(func=cmd_fit_batch)

    pred = commands.add_parser("predict", help="roll out a model and score it")
    pred.add_argument("--model", required=True, help="model JSON")
    pred.add_argument("--input", required=True, help="trajectory CSV with the truth")
    pred.add_argument("--start", type=int, required=True)
    pred.add_argument("--horizon", type=int, required=True)
    pred.add_argument("--train-end", dest="train_end", type=int, default=0,
                      help="rows before this index are training data")
    pred.add_argument("--out", dest="output", required=True)
    pred.add_argument("--mse-out", dest="mse_out", default=None)
    pred.set_defaults(func=cmd_predict)

    sweep = commands.add_parser("sweep-delta", help="pick delta by validation error")
    _add_common_args(sweep)
    _add_dictionary_args(sweep)
    sweep.add_argument("--input", required=True)
    sweep.add_argument("--deltas", type=_float_list, required=True)
    sweep.add_argument("--train-end", dest="train_end", type=int, required=True)
    sweep.add_argument("--val-start", dest="val_start", type=int, required=True)
    sweep.add_argument("--val-end", dest="val_end", type=int, required=True)
    sweep.add_argument("--out", dest="output", default=None)
    sweep.set_defaults(func=cmd_sweep_delta)

    bench = commands.add_parser("bench", help="streaming vs batch-recompute timing")
    _add_common_args(bench)
    _add_dictionary_args(bench)
    bench.add_argument("--input", required=True)
    bench.add_argument("--checkpoints", type=_int_list, default=[250, 500, 1000])
    bench.add_argument("--out", dest="output", required=True)
    bench.add_argument("--update-times-out", dest="update_times_out", default=None)
    bench.set_defaults(func=cmd_bench)

    eigc = commands.add_parser("eig", help="export the spectrum of a saved model")
    eigc.add_argument("--model", required=True)
    eigc.add_argument("--out", dest="output", required=True)
    eigc.add_argument("--dominant", type=int, default=None)
    eigc.set_defaults(func=cmd_eig)
    return parser


def _read_trajectory(path) -> np.ndarray:
    try:
        trajectory, bad_lines = storage.read_trajectory_csv(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if bad_lines:
        shown = ", ".join(str(n) for n in bad_lines[:20])
        _log(f"{path}: {len(bad_lines)} malformed row(s) at line(s) {shown}; "
             "their pairs will be skipped")
    return trajectory


def _build_dictionary(args, trajectory) -> Dictionary:
    n = trajectory.shape[0]
    if args.dict == "linear":
        return make_linear(n)
    finite_cols = trajectory[:, np.isfinite(trajectory).all(axis=0)]
    if finite_cols.shape[1] < args.rbf_count:
        raise DataError(
            f"need at least {args.rbf_count} finite snapshots to place RBF centers, "
            f"found {finite_cols.shape[1]}"
        )
    centers = centers_from_data(finite_cols, args.rbf_count, args.seed + 1)
    gamma = args.gamma if args.gamma is not None else median_gamma(centers)
    return make_rbf(centers, gamma, include_state=args.include_state)


def _load_model(path) -> KoopmanModel:
    try:
        return KoopmanModel.load(path)
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"malformed model file {path}: {exc}") from exc


def cmd_simulate(args) -> int:
    if args.system == "linear":
        system = datagen.random_stable_linear(args.n, args.radius, args.seed, args.dt)
        rng = np.random.default_rng(args.seed + 1)
        x0 = args.x0_scale * rng.standard_normal(args.n)
        trajectory = datagen.simulate_linear(
            system, x0, args.steps, args.noise_std, args.seed + 2
        )
        truth_path = args.truth_out or f"{args.output}.truth.json"
        truth = {
            "system": "linear",
            "n": args.n,
            "dt": args.dt,
            "spectral_radius": system.spectral_radius,
            "eigenvalues": [[v.real, v.imag] for v in system.true_eigenvalues],
        }
        with open(truth_path, "w") as fh:
            json.dump(truth, fh)
        _log(f"wrote true eigenvalues to {truth_path}")
    else:
        net = datagen.swing_3machine()
        x0 = datagen.swing_perturbation(net, args.angle_std, args.freq_std, args.seed + 1)
        trajectory = datagen.simulate_rk4(
            lambda s: datagen.swing_rhs(net, s), x0, args.dt, args.steps
        )
    storage.write_trajectory_csv(args.output, trajectory)
    _log(f"wrote {trajectory.shape[1]} states of dimension {trajectory.shape[0]} "
         f"to {args.output}")
    return EXIT_OK


def cmd_fit_stream(args) -> int:
    trajectory = _read_trajectory(args.input)
    dictionary = _build_dictionary(args, trajectory)
    xp, xf = datagen.to_pairs(trajectory)
    if args.cadence < 1:
        raise ConfigError("cadence must be a positive integer")
    stream = KoopmanStream(dictionary, args.delta)
    history = []
    update_seconds = 0.0

    def report(count):
        spectrum = spectral.eig(stream.snapshot())
        m = min(args.dominant, len(spectrum))
        for idx, value in enumerate(spectral.dominant(spectrum, m)):
            history.append((count, idx, value))

    for i in range(xp.shape[1]):
        t0 = time.perf_counter()
        applied = stream.update(xp[:, i], xf[:, i])
        update_seconds += time.perf_counter() - t0
        if applied and stream.count % args.cadence == 0:
            report(stream.count)
    if stream.count % args.cadence != 0 and stream.count > 0:
        report(stream.count)

    model = stream.snapshot()
    model.save(args.model_out)
    if args.eig_out:
        storage.write_eigen_history_csv(args.eig_out, history)
    _log(f"streamed {stream.count} pairs ({stream.rejected} rejected) in "
         f"{update_seconds:.6f} s of update time; model -> {args.model_out}")
    return EXIT_OK


def cmd_fit_batch(args) -> int:
    trajectory = _read_trajectory(args.input)
    finite = np.isfinite(trajectory).all(axis=0)
    xp, xf = datagen.to_pairs(trajectory)
    keep = finite[:-1] & finite[1:]
    xp, xf = xp[:, keep], xf[:, keep]
    if xp.shape[1] == 0:
        raise DataError("no usable snapshot pairs in input")
    dictionary = _build_dictionary(args, trajectory)
    yp = dictionary.lift_batch(xp)
    yf = dictionary.lift_batch(xf)
    if args.solver == "ridge":
        k_matrix = fit_batch_ridge(yp, yf, args.delta)
    else:
        k_matrix = fit_batch_pinv(yp, yf)
    model = KoopmanModel(k_matrix, dictionary, args.delta, xp.shape[1])
    model.save(args.model_out)
    _log(f"batch {args.solver} fit on {xp.shape[1]} pairs; model -> {args.model_out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    trajectory = _read_trajectory(args.input)
    n_cols = trajectory.shape[1]
    if args.horizon < 0:
        raise ConfigError("horizon must be nonnegative")
    if args.start < args.train_end:
        raise ConfigError(
            f"start {args.start} lies inside the training rows (< {args.train_end}); refusing"
        )
    if not 0 <= args.start or args.start + args.horizon >= n_cols:
        raise DataError(
            f"window [{args.start}, {args.start + args.horizon}] exceeds the "
            f"{n_cols} rows of {args.input}"
        )
    if model.projection is None:
        if args.train_end < 1:
            raise ConfigError(
                "model has no projection; pass --train-end so it can be fit "
                "on training rows only"
            )
        train = trajectory[:, : args.train_end]
        train = train[:, np.isfinite(train).all(axis=0)]
        projection, residual = fit_projection(model.dictionary, train)
        model = model.with_projection(projection)
        _log(f"fitted projection on {train.shape[1]} training rows "
             f"(residual {residual:.3e})")
    predictor = Predictor(model)
    predicted = predictor.predict(trajectory[:, args.start], args.horizon)
    truth = trajectory[:, args.start : args.start + args.horizon + 1]
    if predicted.shape[1] != truth.shape[1]:
        raise NumericalFailure("prediction overflowed before the end of the window")
    per_state, mean = mse(predicted, truth)

    n = trajectory.shape[0]
    import csv as _csv

    with open(args.output, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(
            [f"pred_x{i + 1}" for i in range(n)] + [f"true_x{i + 1}" for i in range(n)]
        )
        for step in range(predicted.shape[1]):
            row = [storage.fmt(v) for v in predicted[:, step]]
            row += [storage.fmt(v) for v in truth[:, step]]
            writer.writerow(row)
    if args.mse_out:
        with open(args.mse_out, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["state_index", "mse", "mean_mse"])
            for idx, value in enumerate(per_state):
                writer.writerow([idx, storage.fmt(value), storage.fmt(mean)])
    print(json.dumps({"mean_mse": mean, "per_state_mse": per_state.tolist()}))
    return EXIT_OK


def cmd_sweep_delta(args) -> int:
    trajectory = _read_trajectory(args.input)
    if not args.deltas:
        raise ConfigError("need at least one delta")
    if any(d <= 0 for d in args.deltas):
        raise ConfigError("deltas must be positive")
    if not (0 < args.train_end <= args.val_start <= args.val_end):
        raise ConfigError("need 0 < train_end <= val_start <= val_end (disjoint windows)")
    if args.val_end >= trajectory.shape[1]:
        raise DataError("validation window exceeds the trajectory")
    dictionary = _build_dictionary(args, trajectory)
    train_size = args.train_end - 1
    rows = []
    for delta in args.deltas:
        result = evaluate_horizon(
            dictionary, delta, [train_size], trajectory, (args.val_start, args.val_end)
        )[0]
        rows.append((delta, result.mean_mse))
        _log(f"delta={delta:g}: validation mse {result.mean_mse:.6e}")
    best_delta = min(rows, key=lambda r: (r[1], r[0]))[0]
    if args.output:
        storage.write_sweep_csv(args.output, rows, best_delta)
    print(json.dumps({"best_delta": best_delta,
                      "table": [{"delta": d, "mean_mse": m} for d, m in rows]}))
    return EXIT_OK


def cmd_bench(args) -> int:
    trajectory = _read_trajectory(args.input)
    dictionary = _build_dictionary(args, trajectory)
    xp, xf = datagen.to_pairs(trajectory)
    n_pairs = xp.shape[1]
    checkpoints = sorted(set(args.checkpoints))
    if not checkpoints or checkpoints[0] < 1:
        raise ConfigError("checkpoints must be positive integers")
    if checkpoints[-1] > n_pairs:
        raise DataError(
            f"largest checkpoint {checkpoints[-1]} exceeds the {n_pairs} available pairs"
        )

    # Warm the JIT and BLAS paths so compilation is not billed to either side.
    warm = KoopmanStream(dictionary, args.delta)
    for i in range(min(3, n_pairs)):
        warm.update(xp[:, i], xf[:, i])
    warm.current_operator()
    fit_batch_ridge(dictionary.lift_batch(xp[:, :2]), dictionary.lift_batch(xf[:, :2]),
                    args.delta)

    stream = KoopmanStream(dictionary, args.delta)
    update_times = []
    stream_cum = {}
    stream_eig = {}
    remaining = list(checkpoints)
    for i in range(n_pairs):
        t0 = time.perf_counter()
        stream.update(xp[:, i], xf[:, i])
        update_times.append(time.perf_counter() - t0)
        if remaining and stream.count == remaining[0]:
            cp = remaining.pop(0)
            stream_cum[cp] = float(np.sum(update_times))
            t0 = time.perf_counter()
            spectral.eig(stream.snapshot())
            stream_eig[cp] = time.perf_counter() - t0
        if not remaining:
            break

    batch_fit = {}
    batch_eig = {}
    for cp in checkpoints:
        t0 = time.perf_counter()
        yp = dictionary.lift_batch(xp[:, :cp])
        yf = dictionary.lift_batch(xf[:, :cp])
        k_matrix = fit_batch_ridge(yp, yf, args.delta)
        batch_fit[cp] = time.perf_counter() - t0
        model = KoopmanModel(k_matrix, dictionary, args.delta, cp)
        t0 = time.perf_counter()
        spectral.eig(model)
        batch_eig[cp] = time.perf_counter() - t0

    # Per-fit cost model fit_seconds ~ c0 + c1 * m, summed over every step,
    # estimates what literal recompute-at-every-arrival would cost.
    cps = np.array(checkpoints, dtype=float)
    fits = np.array([batch_fit[c] for c in checkpoints])
    design = np.stack([np.ones_like(cps), cps], axis=1)
    c0, c1 = np.linalg.lstsq(design, fits, rcond=None)[0]
    every_step = {
        cp: float(max(c0, 0.0) * cp + max(c1, 0.0) * cp * (cp + 1) / 2.0)
        for cp in checkpoints
    }

    rows = [
        (
            cp,
            stream_cum[cp],
            stream_eig[cp],
            batch_fit[cp],
            batch_eig[cp],
            sum(batch_fit[c] for c in checkpoints if c <= cp) / stream_cum[cp],
            every_step[cp],
        )
        for cp in checkpoints
    ]
    storage.write_bench_csv(args.output, rows)
    if args.update_times_out:
        storage.write_update_times_csv(args.update_times_out, update_times)

    m = len(update_times)
    decile = max(1, m // 10)
    first_median = float(np.median(update_times[:decile]))
    last_median = float(np.median(update_times[-decile:]))
    total_stream = stream_cum[checkpoints[-1]]
    total_batch = float(sum(batch_fit.values()))
    summary = {
        "updates": m,
        "rejected": stream.rejected,
        "stream_total_s": total_stream,
        "batch_checkpoint_total_s": total_batch,
        "batch_over_stream_ratio": total_batch / total_stream,
        "every_step_extrapolated_s": every_step[checkpoints[-1]],
        "first_decile_median_update_s": first_median,
        "last_decile_median_update_s": last_median,
    }
    print(json.dumps(summary))
    return EXIT_OK


def cmd_eig(args) -> int:
    model = _load_model(args.model)
    spectrum = spectral.eig(model)
    storage.write_spectrum_csv(args.output, spectrum)
    if args.dominant is not None:
        values = spectral.dominant(spectrum, min(args.dominant, len(spectrum)))
        print(json.dumps([[v.real, v.imag] for v in values]))
    _log(f"wrote {len(spectrum)} eigenvalues to {args.output}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        # Pre-scan for --config so its values become parser defaults that
        # explicit flags still override.
        config_path = None
        for i, token in enumerate(argv):
            if token == "--config":
                config_path = argv[i + 1] if i + 1 < len(argv) else None
            elif token.startswith("--config="):
                config_path = token.split("=", 1)[1]
        if config_path:
            parser.set_defaults(**load_config(config_path))
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    except ValueError as exc:
        _log(f"invalid argument: {exc}")
        return EXIT_CONFIG
    except DataError as exc:
        _log(f"data error: {exc}")
        return EXIT_DATA
    except (NumericalFailure, LinAlgError) as exc:
        _log(f"numerical failure: {exc}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
