"""Command-line harness binding the modules into reproducible experiments.

Every subcommand resolves one config (defaults, optional file, then flags),
runs seeded, and writes a JSON report plus a plain-text summary into the
output directory; the resolved config snapshot, seed, and toolkit version are
embedded in each report so a run can be reproduced from its artifacts alone.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bayes_net import BayesNet, load_checkpoint, predict, save_checkpoint, train
from .config import (
    energy_constants_from,
    load_config,
    magnet_params_from,
    neuron_params_from,
    prior_spec_from,
    pulse_spec_from,
    sampler_config_from,
    dw_device_from,
)
from .crossbar import conductance_matrix_to_dict
from .datasets import (
    load_digits_surrogate,
    load_mnist,
    mnist_available,
    stratified_subset,
)
from .energy import inference_energy_report
from .errors import InvalidStateError, SpinbayesError
from .hardware import (
    apply_network_variation,
    export_network,
    hardware_accuracy,
)
from .magnetodynamics import estimate_switching_probability
from .sampling import GaussianSampler, rng_quality_report


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating, np.bool_)):
        return obj.item()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _write_report(out_dir: Path, name: str, payload: dict, summary: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, default=_jsonable))
    (out_dir / f"{name}.txt").write_text(summary + "\n")
    return path


def _report_envelope(cfg: dict, seed: int) -> dict:
    return {
        "toolkit_version": __version__,
        "seed": seed,
        "config_snapshot": cfg,
    }


def _load_dataset(args, cfg):
    choice = getattr(args, "dataset", "auto")
    data_dir = getattr(args, "data_dir", None)
    if choice == "mnist" or (choice == "auto" and mnist_available(data_dir)):
        return load_mnist(data_dir)
    if choice == "mnist":
        raise InvalidStateError(
            "mnist requested but IDX files were not found (set --data-dir "
            "or SPINBAYES_MNIST_DIR)"
        )
    return load_digits_surrogate()


def _arch_dims(arch: str | None, cfg: dict, n_features: int, n_classes: int):
    if arch:
        hidden = [int(tok) for tok in arch.split(",") if tok.strip()]
    else:
        hidden = list(cfg["bayes_net"]["hidden_layers"])
    return [n_features] + hidden + [n_classes]


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seed"]
    section = cfg["bayes_net"]
    epochs = args.epochs if args.epochs is not None else section["epochs"]
    batch = args.batch_size if args.batch_size is not None else section["batch_size"]
    lr = args.lr if args.lr is not None else section["learning_rate"]
    out_dir = Path(args.out)

    data = _load_dataset(args, cfg)
    x_tr, y_tr = data.train_images, data.train_labels
    if args.subset:
        x_tr, y_tr = stratified_subset(x_tr, y_tr, args.subset, seed)
    dims = _arch_dims(args.arch, cfg, data.n_features, data.n_classes)

    net = BayesNet.create(dims, seed=seed, prior=prior_spec_from(cfg))
    t0 = time.time()
    history = train(
        net,
        x_tr,
        y_tr,
        epochs=epochs,
        batch_size=batch,
        learning_rate=lr,
        n_samples=section["train_samples"],
        seed=seed,
        x_val=data.test_images,
        y_val=data.test_labels,
        eval_samples=section["eval_samples"],
        log_fn=lambda msg: print(msg, flush=True),
    )
    elapsed = time.time() - t0

    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = out_dir / "checkpoint.npz"
    save_checkpoint(
        net,
        ckpt,
        metadata={"dataset": data.name, "train_size": int(y_tr.size), "seed": seed},
    )
    payload = _report_envelope(cfg, seed) | {
        "command": "train",
        "dataset": data.name,
        "dims": dims,
        "epochs": epochs,
        "train_size": int(y_tr.size),
        "history": history,
        "final_train_accuracy": history[-1]["train_accuracy"],
        "final_test_accuracy": history[-1]["val_accuracy"],
        "elapsed_seconds": elapsed,
        "checkpoint": ckpt.name,
    }
    summary = (
        f"train: {data.name} dims={dims} epochs={epochs} seed={seed}\n"
        f"final train accuracy {history[-1]['train_accuracy']:.4f}\n"
        f"final test accuracy  {history[-1]['val_accuracy']:.4f}\n"
        f"checkpoint {ckpt}"
    )
    _write_report(out_dir, "train_report", payload, summary)
    print(summary)
    return 0


def _cmd_eval(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seed"]
    net, extra = load_checkpoint(args.checkpoint)
    data = _load_dataset(args, cfg)
    out = predict(net, data.test_images, args.samples, np.random.default_rng(seed))
    acc = float(np.mean(out.predictions == data.test_labels))
    mean_var = float(out.score_variance.mean())
    payload = _report_envelope(cfg, seed) | {
        "command": "eval",
        "dataset": data.name,
        "checkpoint": str(args.checkpoint),
        "checkpoint_meta": extra,
        "samples": args.samples,
        "test_accuracy": acc,
        "mean_score_variance": mean_var,
    }
    summary = (
        f"eval: {data.name} S={args.samples} seed={seed}\n"
        f"test accuracy {acc:.4f} (mean score variance {mean_var:.3e})"
    )
    _write_report(Path(args.out), "eval_report", payload, summary)
    print(summary)
    return 0


def _cmd_hw_eval(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seed"]
    net, _ = load_checkpoint(args.checkpoint)
    data = _load_dataset(args, cfg)
    hw_section = cfg["hardware"]
    neuron = neuron_params_from(cfg)
    if args.neuron_bits is not None:
        from .magnetodynamics import NeuronParams

        neuron = NeuronParams(output_levels=2**args.neuron_bits)
    weight_levels = (
        2**args.weight_bits if args.weight_bits is not None else hw_section["weight_levels"]
    )
    hw = export_network(
        net,
        device=dw_device_from(cfg),
        weight_levels=weight_levels,
        dac_bits=args.dac_bits or hw_section["dac_bits"],
        adc_bits=args.adc_bits or hw_section["adc_bits"],
        supply_voltage=cfg["crossbar"]["supply_voltage"],
        neuron=neuron,
        sampler_config=sampler_config_from(cfg),
    )
    chunk = hw_section["chunk_size"]
    base_acc = hardware_accuracy(
        hw,
        data.test_images,
        data.test_labels,
        args.samples,
        GaussianSampler(config=hw.sampler_config, seed=seed),
        chunk_size=chunk,
    )
    runs = []
    rng = np.random.default_rng(seed)
    if args.variation > 0 and args.mc_runs > 0:
        for i in range(args.mc_runs):
            inst = apply_network_variation(hw, args.variation, rng)
            runs.append(
                hardware_accuracy(
                    inst,
                    data.test_images,
                    data.test_labels,
                    args.samples,
                    GaussianSampler(config=hw.sampler_config, seed=seed + 1 + i),
                    chunk_size=chunk,
                )
            )
    payload = _report_envelope(cfg, seed) | {
        "command": "hw-eval",
        "dataset": data.name,
        "checkpoint": str(args.checkpoint),
        "samples": args.samples,
        "weight_levels": weight_levels,
        "neuron_levels": neuron.output_levels,
        "hardware_accuracy": base_acc,
        "variation": args.variation,
        "mc_runs": runs,
        "mc_mean_accuracy": float(np.mean(runs)) if runs else None,
        "mc_mean_degradation": float(base_acc - np.mean(runs)) if runs else None,
    }
    lines = [
        f"hw-eval: {data.name} S={args.samples} seed={seed}",
        f"weight levels {weight_levels}, neuron levels {neuron.output_levels}",
        f"hardware accuracy {base_acc:.4f}",
    ]
    if runs:
        lines.append(
            f"variation {args.variation:.0%} x{len(runs)}: "
            + ", ".join(f"{a:.4f}" for a in runs)
        )
        lines.append(
            f"mean {np.mean(runs):.4f} (degradation {base_acc - np.mean(runs):+.4f})"
        )
    summary = "\n".join(lines)
    _write_report(Path(args.out), "hw_eval_report", payload, summary)
    print(summary)
    return 0


def _cmd_rng_test(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seed"]
    config = sampler_config_from(cfg)
    if args.rows is not None:
        from .sampling import GaussianSamplerConfig

        config = GaussianSamplerConfig(
            bit_width=args.bits or config.bit_width, rows_averaged=args.rows
        )
    report = rng_quality_report(config=config, count=args.samples, seed=seed)
    payload = _report_envelope(cfg, seed) | {"command": "rng-test"} | report
    ks = report["ks"]
    summary = "\n".join(
        [
            f"rng-test: {args.samples} samples, N={config.rows_averaged}, "
            f"{config.bit_width}-bit, seed={seed}",
            f"mean {report['moments']['mean']:+.5f}  var {report['moments']['variance']:.5f}",
            f"KS vs sum-of-uniforms D={ks['vs_sum_of_uniforms']:.5f} "
            f"(crit 1% {ks['critical_value_1pct']:.5f}) -> "
            f"{'pass' if ks['sum_of_uniforms_pass'] else 'FAIL'}",
            f"KS vs normal D={ks['vs_standard_normal']:.5f} -> "
            f"{'pass' if ks['normal_distance_below_0p02'] else 'FAIL'}",
        ]
    )
    _write_report(Path(args.out), "rng_report", payload, summary)
    print(summary)
    return 0


def _cmd_device_mc(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seed"]
    params = magnet_params_from(cfg)
    pulse = pulse_spec_from(cfg)
    if args.current is not None or args.pulse is not None:
        from .magnetodynamics import PulseSpec

        pulse = PulseSpec(
            charge_current=args.current
            if args.current is not None
            else pulse.charge_current,
            duration=args.pulse if args.pulse is not None else pulse.duration,
        )
    t0 = time.time()
    p_hat, halfwidth = estimate_switching_probability(
        params,
        pulse,
        trials=args.trials,
        seed=seed,
        relax_time=cfg["pulse"]["relax_time"],
    )
    elapsed = time.time() - t0
    payload = _report_envelope(cfg, seed) | {
        "command": "device-mc",
        "trials": args.trials,
        "pulse_current": pulse.charge_current,
        "pulse_duration": pulse.duration,
        "p_switch": p_hat,
        "halfwidth_3sigma": halfwidth,
        "elapsed_seconds": elapsed,
    }
    summary = (
        f"device-mc: {args.trials} trials, {pulse.charge_current * 1e6:.0f} uA / "
        f"{pulse.duration * 1e9:.1f} ns, seed={seed}\n"
        f"P(switch) = {p_hat:.4f} +- {halfwidth:.4f} (3 sigma)\n"
        f"elapsed {elapsed:.1f} s"
    )
    _write_report(Path(args.out), "device_mc_report", payload, summary)
    print(summary)
    return 0


def _cmd_energy(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["seed"]
    dims = [int(tok) for tok in args.arch.split(",") if tok.strip()]
    net = BayesNet.create(dims, seed=seed)
    hw = export_network(
        net,
        device=dw_device_from(cfg),
        weight_levels=cfg["hardware"]["weight_levels"],
        dac_bits=cfg["hardware"]["dac_bits"],
        adc_bits=cfg["hardware"]["adc_bits"],
        supply_voltage=cfg["crossbar"]["supply_voltage"],
        sampler_config=sampler_config_from(cfg),
    )
    ledger = inference_energy_report(
        hw, energy_constants_from(cfg), n_samples=args.samples
    )
    payload = _report_envelope(cfg, seed) | {
        "command": "energy",
        "arch": dims,
        "samples": args.samples,
    } | ledger.to_dict()
    summary = (
        f"energy: dims={dims} samples={args.samples}\n"
        + ledger.format_table()
    )
    _write_report(Path(args.out), "energy_report", payload, summary)
    print(summary)
    return 0


def _cmd_export(args) -> int:
    cfg = load_config(args.config)
    net, extra = load_checkpoint(args.checkpoint)
    hw = export_network(
        net,
        device=dw_device_from(cfg),
        weight_levels=cfg["hardware"]["weight_levels"],
        dac_bits=cfg["hardware"]["dac_bits"],
        adc_bits=cfg["hardware"]["adc_bits"],
        supply_voltage=cfg["crossbar"]["supply_voltage"],
        neuron=neuron_params_from(cfg),
        sampler_config=sampler_config_from(cfg),
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "toolkit_version": __version__,
        "checkpoint": str(args.checkpoint),
        "checkpoint_meta": extra,
        "dims": hw.dims,
        "layers": [],
    }
    for li, layer in enumerate(hw.layers):
        rec = {}
        for path_name, cm in (
            ("mean", layer.mean_matrix),
            ("sigma", layer.sigma_matrix),
        ):
            fname = f"layer{li + 1}_{path_name}.json"
            (out_dir / fname).write_text(
                json.dumps(conductance_matrix_to_dict(cm))
            )
            rec[path_name] = fname
        rec["u_scale"] = layer.u_scale
        manifest["layers"].append(rec)
    (out_dir / "export_manifest.json").write_text(json.dumps(manifest, indent=2))
    print(f"exported {len(hw.layers)} layer pairs to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinbayes",
        description="Stochastic-device Bayesian network co-simulation harness",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="YAML config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default="runs", help="output directory")

    def with_data(p):
        p.add_argument(
            "--dataset",
            choices=["auto", "mnist", "digits"],
            default="auto",
            help="auto prefers mnist when its IDX files are found",
        )
        p.add_argument("--data-dir", default=None, help="directory of IDX files")

    p = sub.add_parser("train", help="train the variational network")
    common(p)
    with_data(p)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--subset", type=int, default=None, help="stratified train subset")
    p.add_argument("--arch", default=None, help="hidden sizes, e.g. 200,200")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="software-path test accuracy")
    common(p)
    with_data(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--samples", type=int, default=10)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("hw-eval", help="hardware-constrained test accuracy")
    common(p)
    with_data(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--weight-bits", type=int, default=None)
    p.add_argument("--neuron-bits", type=int, default=None)
    p.add_argument("--dac-bits", type=int, default=None)
    p.add_argument("--adc-bits", type=int, default=None)
    p.add_argument("--variation", type=float, default=0.0)
    p.add_argument("--mc-runs", type=int, default=0)
    p.set_defaults(func=_cmd_hw_eval)

    p = sub.add_parser("rng-test", help="Gaussian sampler statistics")
    common(p)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--rows", type=int, default=None, help="uniforms averaged per sample")
    p.add_argument("--bits", type=int, default=None)
    p.set_defaults(func=_cmd_rng_test)

    p = sub.add_parser("device-mc", help="reset-relax switching statistics")
    common(p)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--current", type=float, default=None, help="reset charge current (A)")
    p.add_argument("--pulse", type=float, default=None, help="reset pulse width (s)")
    p.set_defaults(func=_cmd_device_mc)

    p = sub.add_parser("energy", help="per-inference energy ledger")
    common(p)
    p.add_argument("--arch", default="784,200,200,10", help="full dims incl. input/output")
    p.add_argument("--samples", type=int, default=1)
    p.set_defaults(func=_cmd_energy)

    p = sub.add_parser("export", help="write conductance artifacts for a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=_cmd_export)

    return parser


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SpinbayesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
