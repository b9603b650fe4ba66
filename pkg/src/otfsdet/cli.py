"""Command-line front end.

Subcommands: complexity, gen-data, train, eval, reproduce.  Every file an
invocation writes gets a sibling ``<file>.manifest.json`` recording the
resolved configuration, master seed, tool version, argv and all sibling
outputs, so any run can be repeated byte-identically from its manifest.

Exit codes: 0 success, 1 I/O failure, 2 usage or validation failure.
"""

import argparse
import json
import os
import sys
import time
from datetime import datetime, timezone

from . import __version__
from .complexity import (
    ComplexityQuery,
    rm_cnn,
    rm_mld,
    rm_mlp,
    rm_mrc_ml_total,
    rm_resnet,
    sig3,
    table_6g,
    write_complexity_csv,
)
from .config import ExperimentConfig, load_config, parse_config
from .detector import write_ber_csv
from .errors import ConfigError
from .neural import TrainConfig, load_checkpoint, save_checkpoint, train_model
from .neural.train import write_loss_history
from .pipeline import (
    MldDetector,
    NeuralDetector,
    SimConfig,
    generate_dataset,
    read_dataset,
    run_detector_ber,
    run_full_experiment,
    write_dataset,
)
from .reference import COMPLEXITY_6G, SNR_GRID_DB, ber_reference

PROG = "otfsdet"


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifests(outputs, command, seed, config_snapshot, started):
    """One manifest JSON per output file, all listing the whole run."""
    doc = {
        "tool": PROG,
        "version": __version__,
        "command": command,
        "argv": list(sys.argv[1:]),
        "seed": seed,
        "config": config_snapshot,
        "outputs": [str(p) for p in outputs],
        "started": started,
        "finished": _utc_now(),
    }
    for out in outputs:
        with open(f"{out}.manifest.json", "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _load_experiment(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return parse_config("")


# ---------------------------------------------------------------- complexity

def _single_query_row(q: ComplexityQuery) -> dict:
    return {
        "m": q.m, "n": q.n, "nt": q.nt, "nr": q.nr, "q": q.q,
        "mld": rm_mld(q), "mrc_ml_total": rm_mrc_ml_total(q),
        "mlp": rm_mlp(q), "cnn": rm_cnn(q), "resnet": rm_resnet(q),
    }


def cmd_complexity(args) -> int:
    started = _utc_now()
    if args.table_6g:
        if not args.out:
            print("error: --table-6g needs --out", file=sys.stderr)
            return 2
        rows = table_6g()
        write_complexity_csv(rows, args.out)
        outputs = [args.out]
        if not args.no_figures:
            from .figures import plot_complexity_table

            fig = os.path.splitext(args.out)[0] + ".png"
            plot_complexity_table(rows, fig)
            outputs.append(fig)
        write_manifests(outputs, "complexity", None, {"table_6g": True}, started)
        print(f"wrote {len(rows)}-row sizing table to {args.out}")
        return 0
    if None in (args.m, args.n, args.nt, args.q):
        print("error: need --table-6g or all of --m --n --nt --q", file=sys.stderr)
        return 2
    q = ComplexityQuery(m=args.m, n=args.n, nt=args.nt, nr=args.nr, q=args.q)
    row = _single_query_row(q)
    for key in ("mld", "mrc_ml_total", "mlp", "cnn", "resnet"):
        print(f"{key}={row[key]}")
    if args.out:
        cols = list(row)
        with open(args.out, "w") as fh:
            fh.write(",".join(cols) + "\n")
            fh.write(",".join(str(row[c]) for c in cols) + "\n")
        write_manifests([args.out], "complexity", None, {"query": row}, started)
    return 0


# ------------------------------------------------------------------ gen-data

def cmd_gen_data(args) -> int:
    started = _utc_now()
    cfg = _load_experiment(args)
    snr = args.snr_db if args.snr_db is not None else cfg.sim.snr_train_db
    frames = args.frames if args.frames is not None else cfg.sim.train_frames
    ds = generate_dataset(cfg.sim, snr, frames, purpose="train")
    write_dataset(ds, args.out)
    write_manifests([args.out], "gen-data", cfg.seed, cfg.to_dict(), started)
    print(f"wrote {len(ds)} records ({frames} frames at {snr:g} dB) to {args.out}")
    return 0


# --------------------------------------------------------------------- train

def cmd_train(args) -> int:
    started = _utc_now()
    cfg = _load_experiment(args)
    ds = read_dataset(args.data)
    data_q = int(ds.config["system"]["qam_order"])
    if data_q != cfg.sim.q:
        raise ConfigError(
            f"dataset was generated at Q={data_q} but config says Q={cfg.sim.q}"
        )
    result = train_model(args.arch, data_q, ds.features, ds.labels, cfg.train)
    save_checkpoint(args.out, result)
    hist_path = os.path.splitext(args.out)[0] + "_loss.csv"
    write_loss_history(result.history, hist_path)
    outputs = [args.out, hist_path]
    if not args.no_figures:
        from .figures import plot_loss_history

        fig = os.path.splitext(args.out)[0] + "_loss.png"
        plot_loss_history(result.history, fig, title=args.arch)
        outputs.append(fig)
    write_manifests(outputs, "train", cfg.seed, cfg.to_dict(), started)
    best = min(f.best_val_loss for f in result.fold_summaries)
    print(
        f"trained {args.arch} (Q={data_q}) on {len(ds)} records: "
        f"best fold {result.best_fold} val loss {best:.6f}, "
        f"retrained {result.retrain_epochs} epochs -> {args.out}"
    )
    return 0


# ---------------------------------------------------------------------- eval

def _parse_snr_list(text):
    try:
        vals = tuple(float(s) for s in text.split(","))
    except ValueError:
        raise ConfigError(f"bad --snr-list {text!r}") from None
    if not vals:
        raise ConfigError("--snr-list is empty")
    return vals


def cmd_eval(args) -> int:
    started = _utc_now()
    cfg = _load_experiment(args)
    sim = cfg.sim
    if args.snr_list:
        from dataclasses import replace

        sim = replace(sim, snr_test_db=_parse_snr_list(args.snr_list))
    detectors = []
    if args.detector == "mld":
        detectors.append(MldDetector())
    for ckpt in args.ckpt or []:
        model, scaler, _meta = load_checkpoint(ckpt)
        detectors.append(NeuralDetector(model, scaler))
    if not detectors:
        print("error: select --detector mld and/or at least one --ckpt", file=sys.stderr)
        return 2
    reports = run_detector_ber(sim, detectors, frames=args.frames)
    write_ber_csv(reports, args.out)
    outputs = [args.out]
    if not args.no_figures:
        from .figures import plot_ber_curves

        ref = {}
        if sim.q == 4 and tuple(sim.snr_test_db) == SNR_GRID_DB:
            for det in detectors:
                vals = ber_reference(sim.nt, sim.profile.m, det.name)
                if vals is not None:
                    ref[det.name] = (SNR_GRID_DB, vals)
        fig = os.path.splitext(args.out)[0] + ".png"
        plot_ber_curves(reports, fig, reference=ref or None)
        outputs.append(fig)
    write_manifests(outputs, "eval", cfg.seed, cfg.to_dict(), started)
    names = ",".join(d.name for d in detectors)
    print(f"evaluated {names} at {len(sim.snr_test_db)} SNR points -> {args.out}")
    return 0


# ----------------------------------------------------------------- reproduce

BER_STAGES = {
    # stage -> (nt, nr, nakagami m, qam order, archs)
    "ber_siso_m1": (1, 1, 1.0, 4, ("mlp", "cnn", "resnet")),
    "ber_siso_m2": (1, 1, 2.0, 4, ("mlp", "cnn", "resnet")),
    "ber_mimo_m1": (2, 2, 1.0, 4, ("mlp", "cnn", "resnet")),
    "ber_mimo_m2": (2, 2, 2.0, 4, ("mlp", "cnn", "resnet")),
    "ber_16qam_m2": (1, 1, 2.0, 16, ("mlp",)),
}
ALL_STAGES = ("complexity",) + tuple(BER_STAGES)


def _reproduce_sim(args, nt, nr, m, q) -> SimConfig:
    from dataclasses import replace

    from .channel import ChannelProfile

    if args.smoke:
        profile = ChannelProfile(paths=3, m=m, l_max=4, k_max=2)
        sim = SimConfig(m_bins=8, n_bins=8, nt=nt, nr=nr, q=q, profile=profile,
                        target_symbols=2048, train_frames=2,
                        master_seed=args.seed)
    else:
        profile = ChannelProfile(m=m)
        sim = SimConfig(nt=nt, nr=nr, q=q, profile=profile, master_seed=args.seed)
    if args.target_symbols:
        sim = replace(sim, target_symbols=args.target_symbols)
    if args.train_frames:
        sim = replace(sim, train_frames=args.train_frames)
    return sim


def _complexity_stage(out_dir, no_figures):
    rows = table_6g()
    csv_path = os.path.join(out_dir, "complexity.csv")
    write_complexity_csv(rows, csv_path)
    outputs = [csv_path]
    if not no_figures:
        from .figures import plot_complexity_table

        fig = os.path.join(out_dir, "complexity.png")
        plot_complexity_table(rows, fig)
        outputs.append(fig)
    cells = []
    matching = 0
    for row in rows:
        pub = COMPLEXITY_6G[(row["nt"], row["q"])]
        for det in ("mld", "mlp", "cnn", "resnet"):
            ours, published = row[det], pub[det]
            match = sig3(ours) == sig3(published)
            matching += match
            cells.append({
                "nt": row["nt"], "q": row["q"], "detector": det,
                "ours": ours, "ours_3sig": sig3(ours),
                "published_3sig": sig3(published), "match": bool(match),
            })
    return {
        "cells_total": len(cells), "cells_matching": matching, "cells": cells,
    }, outputs


def _ber_stage(name, args, out_dir, train_cfg):
    nt, nr, m, q, archs = BER_STAGES[name]
    archs = tuple(a for a in archs if a in args.archs)
    sim = _reproduce_sim(args, nt, nr, m, q)
    stage_dir = os.path.join(out_dir, name)
    paths = run_full_experiment(sim, archs, stage_dir, train_cfg=train_cfg)
    reports = paths.pop("reports")
    outputs = [paths["dataset"], paths["ber_csv"]]
    outputs += list(paths["checkpoints"].values())
    outputs += list(paths["loss_history"].values())
    if not args.no_figures:
        from .figures import plot_ber_curves

        ref = {}
        if q == 4 and tuple(sim.snr_test_db) == SNR_GRID_DB and not args.smoke:
            for det in ("mld",) + archs:
                vals = ber_reference(nt, m, det)
                if vals is not None:
                    ref[det] = (SNR_GRID_DB, vals)
        fig = os.path.join(stage_dir, "ber.png")
        plot_ber_curves(reports, fig, reference=ref or None, title=name)
        outputs.append(fig)
    by_det = {}
    for r in reports:
        by_det.setdefault(r.detector, {})[r.snr_db] = r.ber
    cells = []
    mld = by_det.get("mld", {})
    for det, curve in by_det.items():
        # published cells are for the full-size geometry only
        pub = ber_reference(nt, m, det) if q == 4 and not args.smoke else None
        for i, snr in enumerate(sim.snr_test_db):
            ours = curve[snr]
            cell = {"detector": det, "snr_db": snr, "ours": ours}
            if pub is not None and tuple(sim.snr_test_db) == SNR_GRID_DB:
                published = pub[i]
                cell["published"] = published
                cell["rel_dev"] = (ours - published) / published
            if det != "mld" and snr in mld and mld[snr] > 0:
                cell["rel_dev_vs_our_mld"] = (ours - mld[snr]) / mld[snr]
            cells.append(cell)
    return {"config": sim.to_dict(), "cells": cells}, outputs


def _render_summary_text(summary) -> str:
    lines = [f"{PROG} reproduction summary ({_utc_now()})", ""]
    for name, st in summary["stages"].items():
        status = st["status"]
        lines.append(f"[{name}] {status}, {st['runtime_s']:.1f} s")
        if status == "failed":
            lines.append(f"  error: {st['error']}")
            lines.append("")
            continue
        if name == "complexity":
            lines.append(
                f"  {st['cells_matching']}/{st['cells_total']} cells match "
                "the published values at 3 significant figures"
            )
        else:
            for c in st.get("cells", []):
                parts = [f"  {c['detector']:>6} @ {c['snr_db']:>4g} dB: ber={c['ours']:.6g}"]
                if "published" in c:
                    parts.append(
                        f"published={c['published']:.6g} dev={100 * c['rel_dev']:+.1f}%"
                    )
                if "rel_dev_vs_our_mld" in c:
                    parts.append(f"vs our mld {100 * c['rel_dev_vs_our_mld']:+.1f}%")
                lines.append("  ".join(parts))
        lines.append("")
    lines.append(f"total runtime: {summary['total_runtime_s']:.1f} s")
    lines.append("")
    return "\n".join(lines)


def cmd_reproduce(args) -> int:
    started = _utc_now()
    args.archs = tuple(args.archs.split(","))
    bad = set(args.archs) - {"mlp", "cnn", "resnet"}
    if bad:
        print(f"error: unknown arch(es): {', '.join(sorted(bad))}", file=sys.stderr)
        return 2
    stages = tuple(args.stages.split(",")) if args.stages else ALL_STAGES
    unknown = set(stages) - set(ALL_STAGES)
    if unknown:
        print(f"error: unknown stage(s): {', '.join(sorted(unknown))}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    if args.smoke:
        train_cfg = TrainConfig(max_epochs=4, batch_size=512, folds=2, seed=args.seed)
    else:
        train_cfg = TrainConfig(seed=args.seed)

    summary = {"version": __version__, "seed": args.seed, "stages": {}}
    all_outputs = []
    t_total = time.perf_counter()
    for name in stages:
        t0 = time.perf_counter()
        try:
            if name == "complexity":
                body, outputs = _complexity_stage(args.out, args.no_figures)
            else:
                body, outputs = _ber_stage(name, args, args.out, train_cfg)
            body["status"] = "ok"
            all_outputs += outputs
        except Exception as e:  # noqa: BLE001 - partial bundles allowed
            body = {"status": "failed", "error": str(e)}
        body["runtime_s"] = time.perf_counter() - t0
        body = {"status": body.pop("status"), "runtime_s": body.pop("runtime_s"), **body}
        summary["stages"][name] = body
        print(f"[{name}] {body['status']} ({body['runtime_s']:.1f} s)")
    summary["total_runtime_s"] = time.perf_counter() - t_total

    json_path = os.path.join(args.out, "summary.json")
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    text_path = os.path.join(args.out, "summary.txt")
    with open(text_path, "w") as fh:
        fh.write(_render_summary_text(summary))
    all_outputs += [json_path, text_path]
    write_manifests(all_outputs, "reproduce", args.seed,
                    {"stages": list(stages), "archs": list(args.archs),
                     "smoke": bool(args.smoke)}, started)
    print(f"summary -> {text_path}")
    return 0


# ---------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Delay-Doppler grid link simulator with classical and neural detectors",
    )
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complexity", help="per-frame real-multiplication counts")
    p.add_argument("--table-6g", action="store_true",
                   help="emit the full large-system sizing table")
    p.add_argument("--m", type=int, help="delay bins")
    p.add_argument("--n", type=int, help="Doppler bins")
    p.add_argument("--nt", type=int, help="transmit antennas")
    p.add_argument("--nr", type=int, default=1, help="receive antennas")
    p.add_argument("--q", type=int, help="constellation order")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("gen-data", help="simulate frames into a labelled dataset file")
    p.add_argument("--config", help="YAML config path")
    p.add_argument("--snr-db", type=float, help="dataset SNR (default: training SNR)")
    p.add_argument("--frames", type=int, help="frame count (default: training frames)")
    p.add_argument("--out", required=True, help="dataset file path")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="cross-validate and train one detector network")
    p.add_argument("--config", help="YAML config path")
    p.add_argument("--arch", required=True, choices=("mlp", "cnn", "resnet"))
    p.add_argument("--data", required=True, help="dataset file from gen-data")
    p.add_argument("--out", required=True, help="checkpoint path (.npz)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="paired BER evaluation over the SNR grid")
    p.add_argument("--config", help="YAML config path")
    p.add_argument("--detector", choices=("mld",), help="include the classical detector")
    p.add_argument("--ckpt", action="append", help="trained checkpoint (repeatable)")
    p.add_argument("--snr-list", help="comma-separated SNR points, e.g. 0,4,8,12,16")
    p.add_argument("--frames", type=int, help="override evaluated frame count")
    p.add_argument("--out", required=True, help="BER CSV path")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reproduce", help="rebuild the published benchmark tables")
    p.add_argument("--paper-tables", action="store_true",
                   help="reproduce the published benchmark tables (the default and only mode)")
    p.add_argument("--out", required=True, help="bundle directory")
    p.add_argument("--stages", help=f"comma-separated subset of: {','.join(ALL_STAGES)}")
    p.add_argument("--archs", default="mlp,cnn,resnet",
                   help="network architectures to train per experiment")
    p.add_argument("--target-symbols", type=int, help="override evaluation symbol budget")
    p.add_argument("--train-frames", type=int, help="override training frame count")
    p.add_argument("--seed", type=int, default=SimConfig.master_seed)
    p.add_argument("--smoke", action="store_true",
                   help="tiny grids and short training, for plumbing checks")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as e:
        # ConfigError / ParameterError / ProfileError / DimensionError all
        # derive from ValueError: bad inputs, not broken environment
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except RuntimeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
