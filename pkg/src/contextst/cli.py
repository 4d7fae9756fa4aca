"""Command-line front end.

Configuration is a flat key-value file with dotted keys (``model.n_bands = 3``);
``--set key=value`` flags override file values. ``--threads 1`` pins the BLAS
thread pools before numpy loads, which is the deterministic mode the
acceptance suite uses.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _parse_scalar(text):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            values[key.strip()] = _parse_scalar(raw)
    return values


def write_config_file(values, path):
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(values):
            fh.write(f"{key} = {values[key]}\n")


def resolve_path(path):
    if path and not os.path.exists(path):
        root = os.environ.get("CONTEXTST_DATA_DIR")
        if root:
            candidate = os.path.join(root, path)
            if os.path.exists(candidate):
                return candidate
    return path


def build_parser():
    parser = argparse.ArgumentParser(prog="contextst")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key-value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       dest="overrides", help="override one config key")
        p.add_argument("--dataset", default=None)
        p.add_argument("--preset", default=None)

    p = sub.add_parser("decompose", help="spectral decomposition report")
    common(p)
    p.add_argument("--csv", action="store_true", help="also write component CSVs")

    p = sub.add_parser("train", help="train a model and save the checkpoint")
    common(p)
    p.add_argument("--anchors", default=None)
    p.add_argument("--no-context", action="store_true")

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    common(p)
    p.add_argument("--anchors", default=None)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--horizons", default=None, help="comma-separated prefixes")

    p = sub.add_parser("zeroshot", help="zero-shot transfer to a target dataset")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--target-anchors", required=True)
    p.add_argument("--horizons", default=None)

    p = sub.add_parser("analyze", help="GAF image and forecastability score")
    common(p)
    p.add_argument("--variable", default=None)
    p.add_argument("--pgm", action="store_true", help="emit PGM instead of CSV")

    p = sub.add_parser("make-anchors", help="run the anchor-generation tool")
    common(p)
    p.add_argument("--meta", required=True)
    p.add_argument("--dim", type=int, default=384)
    p.add_argument("--provider", default="offline")
    p.add_argument("--endpoint", default=None)
    return parser


def effective_config(args):
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for item in args.overrides:
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        values[key.strip()] = _parse_scalar(raw)
    if args.dataset:
        values["dataset"] = args.dataset
    if args.preset:
        values["preset"] = args.preset
    if args.seed is not None:
        values["seed"] = args.seed
    if getattr(args, "anchors", None):
        values["anchors"] = args.anchors
    if getattr(args, "no_context", False):
        values["model.no_context"] = True
    values.setdefault("seed", 0)
    return values


def _model_config(values, presets, model_mod):
    overrides = {}
    mapping = {
        "model.n_bands": "n_bands", "model.patch_len": "patch_len",
        "model.lookback": "lookback", "model.horizon": "horizon",
        "model.d_model": "d_model", "model.n_heads": "n_heads",
        "model.n_blocks": "n_blocks", "model.n_experts": "n_experts",
        "model.top_r": "top_r", "model.d_context": "d_context",
        "model.kappa": "kappa", "model.d_ff": "d_ff",
        "model.activation": "activation", "model.no_context": "no_context",
    }
    for key, fname in mapping.items():
        if key in values:
            overrides[fname] = values[key]
    preset = values.get("preset")
    if preset:
        return presets.model_preset(
            preset,
            lookback=overrides.pop("lookback", 96),
            horizon=overrides.pop("horizon", 96),
            d_context=overrides.pop("d_context", 384),
            **overrides,
        )
    return model_mod.ModelConfig(**overrides)


def _split_spec(values, presets, data_mod):
    if "split.mode" in values or "split.ratios" in values:
        mode = values.get("split.mode", "ratio")
        if mode == "fixed":
            borders = tuple(int(x) for x in str(values["split.borders"]).split(","))
            return data_mod.SplitSpec(
                mode="fixed", borders=borders,
                eval_overlap=int(values.get("split.eval_overlap", 0)),
            )
        ratios = tuple(float(x) for x in str(values.get("split.ratios", "0.7,0.1,0.2")).split(","))
        return data_mod.SplitSpec(
            mode="ratio", ratios=ratios,
            eval_overlap=int(values.get("split.eval_overlap", values.get("model.lookback", 96))),
        )
    preset = values.get("preset")
    lookback = int(values.get("model.lookback", 96))
    if preset:
        return presets.split_preset(preset, lookback)
    return data_mod.SplitSpec(mode="ratio", ratios=(0.7, 0.1, 0.2), eval_overlap=lookback)


def _train_config(values, training):
    return training.TrainConfig(
        lr=float(values.get("train.lr", 1e-3)),
        epochs=int(values.get("train.epochs", 10)),
        batch_size=int(values.get("train.batch_size", 32)),
        delta=float(values.get("train.delta", 1.0)),
        alpha=float(values.get("train.alpha", 0.01)),
        seed=int(values.get("seed", 0)),
        patience=int(values.get("train.patience", 5)),
        log_timing=not values.get("deterministic", False),
    )


def _load_normalized_splits(values, data_mod, presets):
    path = resolve_path(values["dataset"])
    dataset = data_mod.load_csv(path)
    spec = _split_spec(values, presets, data_mod)
    train_seg, val_seg, test_seg = data_mod.split(dataset, spec)
    (train_n, val_n, test_n), norm = data_mod.standardize(train_seg, val_seg, test_seg)
    return dataset, (train_n, val_n, test_n), norm


def cmd_decompose(args):
    from contextst import coordinator, data as data_mod, model as model_mod, presets

    values = effective_config(args)
    cfg_model = _model_config(values, presets, model_mod)
    dataset, (train_n, _, _), _ = _load_normalized_splits(values, data_mod, presets)
    os.makedirs(args.out, exist_ok=True)
    report = {"dataset": dataset.name, "n_bands": cfg_model.n_bands, "variables": {}}
    for v, name in enumerate(dataset.var_names):
        window = train_n.values[:cfg_model.lookback, v]
        decomp, _ = coordinator.coordinate(
            window, cfg_model.n_bands, cfg_model.kappa, cfg_model.patch_len
        )
        spec = coordinator.spectrum(decomp.detrended)
        entry = {"boundaries": decomp.boundaries.tolist()}
        if not spec.degenerate:
            entry["band_energy_fractions"] = coordinator.band_energy_fractions(
                spec, decomp.boundaries
            ).tolist()
        report["variables"][name] = entry
        if args.csv:
            import numpy as np

            rows = np.concatenate([decomp.trend[None], decomp.components], axis=0)
            header = "trend," + ",".join(
                f"band{k + 1}" for k in range(decomp.components.shape[0])
            )
            np.savetxt(os.path.join(args.out, f"components_{v}.csv"),
                       rows.T, delimiter=",", header=header, comments="")
    with open(os.path.join(args.out, "decomposition.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    write_config_file(values, os.path.join(args.out, "effective.cfg"))
    return 0


def cmd_train(args):
    from contextst import anchors as anchors_mod, data as data_mod
    from contextst import model as model_mod, presets, training

    values = effective_config(args)
    cfg = _model_config(values, presets, model_mod)
    tcfg = _train_config(values, training)
    dataset, (train_n, val_n, _), norm = _load_normalized_splits(values, data_mod, presets)
    anchor_set = anchors_mod.load_anchors(resolve_path(values["anchors"]), dataset.var_names)
    stride = int(values.get("train.stride", 1))
    train_windows = data_mod.make_windows(train_n, cfg.lookback, cfg.horizon, stride, norm=norm)
    val_windows = data_mod.make_windows(val_n, cfg.lookback, cfg.horizon, 1, norm=norm)
    os.makedirs(args.out, exist_ok=True)
    params, _ = training.train(
        train_windows, val_windows, anchor_set, cfg, tcfg, dataset.var_names,
        history_path=os.path.join(args.out, "history.jsonl"),
    )
    model_mod.save_checkpoint(os.path.join(args.out, "model.ctst"), params, cfg)
    write_config_file(values, os.path.join(args.out, "effective.cfg"))
    return 0


def _horizon_list(raw):
    if not raw:
        return None
    return [int(x) for x in str(raw).split(",")]


def cmd_eval(args):
    from contextst import anchors as anchors_mod, data as data_mod
    from contextst import model as model_mod, presets, training

    values = effective_config(args)
    params, cfg = model_mod.load_checkpoint(resolve_path(args.checkpoint))
    dataset, (_, _, test_n), norm = _load_normalized_splits(values, data_mod, presets)
    anchor_set = anchors_mod.load_anchors(resolve_path(values["anchors"]), dataset.var_names)
    windows = data_mod.make_windows(test_n, cfg.lookback, cfg.horizon, 1, norm=norm)
    report = training.evaluate(
        windows, anchor_set, params, cfg, dataset.var_names,
        horizons=_horizon_list(args.horizons),
    )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1)
        fh.write("\n")
    write_config_file(values, os.path.join(args.out, "effective.cfg"))
    return 0


def cmd_zeroshot(args):
    from contextst import anchors as anchors_mod, data as data_mod
    from contextst import model as model_mod, presets, training

    values = effective_config(args)
    params, cfg = model_mod.load_checkpoint(resolve_path(args.checkpoint))
    target = data_mod.load_csv(resolve_path(args.target))
    anchor_set = anchors_mod.load_anchors(resolve_path(args.target_anchors), target.var_names)
    values.setdefault("dataset", args.target)
    spec = _split_spec(values, presets, data_mod)
    report = training.zero_shot(
        params, cfg, target, anchor_set, spec, horizons=_horizon_list(args.horizons)
    )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1)
        fh.write("\n")
    write_config_file(values, os.path.join(args.out, "effective.cfg"))
    return 0


def cmd_analyze(args):
    import numpy as np

    from contextst import analysis, data as data_mod, presets

    values = effective_config(args)
    dataset = data_mod.load_csv(resolve_path(values["dataset"]))
    lookback = int(values.get("model.lookback", 96))
    os.makedirs(args.out, exist_ok=True)
    names = [args.variable] if args.variable else list(dataset.var_names)
    scores = {}
    for name in names:
        if name not in dataset.var_names:
            raise data_mod.DataFormatError(f"unknown variable {name!r}")
        series = dataset.values[:lookback, dataset.var_names.index(name)]
        matrix = analysis.gaf(series)
        if args.pgm:
            analysis.gaf_to_pgm(matrix, os.path.join(args.out, f"gaf_{name}.pgm"))
        else:
            np.savetxt(os.path.join(args.out, f"gaf_{name}.csv"), matrix, delimiter=",")
        scores[name] = analysis.forecastability(series)
    with open(os.path.join(args.out, "forecastability.json"), "w", encoding="utf-8") as fh:
        json.dump(scores, fh, indent=1)
        fh.write("\n")
    write_config_file(values, os.path.join(args.out, "effective.cfg"))
    return 0


def cmd_make_anchors(args):
    """Delegate to the standalone anchor-generation tool."""
    import subprocess

    values = effective_config(args)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "anchors.json")
    cmd = [
        sys.executable, "-m", "anchorgen",
        "--dataset", resolve_path(values["dataset"]),
        "--meta", args.meta,
        "--out", out_path,
        "--provider", args.provider,
        "--dim", str(args.dim),
    ]
    if args.endpoint:
        cmd += ["--endpoint", args.endpoint]
    proc = subprocess.run(cmd)
    return proc.returncode


COMMANDS = {
    "decompose": cmd_decompose,
    "train": cmd_train,
    "eval": cmd_eval,
    "zeroshot": cmd_zeroshot,
    "analyze": cmd_analyze,
    "make-anchors": cmd_make_anchors,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
        if args.threads == 1:
            args.overrides.append("deterministic=true")
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # single-line machine-parsable failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
