"""Command-line entry points.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error. Every
command is non-interactive and writes its outputs under caller-chosen paths.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

import morphdet
from morphdet import featureio
from morphdet import features as feats
from morphdet.dataset import (
    ManifestError,
    PreprocessError,
    load_image,
    load_manifest,
    preprocess_face,
    preprocess_record,
)
from morphdet.features import FeatureConfig, FeatureError
from morphdet.forest import ForestError, ForestParams, load_model, predict_scores, save_model, train_forest
from morphdet.metrics import (
    MetricsError,
    det_curve,
    metrics_report,
    operating_thresholds,
    read_scores_csv,
    write_det_csv,
    write_report_json,
)
from morphdet.protocol import ProtocolError, RunConfig, run_loo, summarize
from morphdet.service import ServiceError, ServiceState, load_models_dir, serve_forever

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

_DATA_ERRORS = (
    ManifestError,
    PreprocessError,
    FeatureError,
    ForestError,
    MetricsError,
    ProtocolError,
    ServiceError,
    featureio.FeatureIOError,
    FileNotFoundError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits 2; we reserve 2 for data errors
        raise UsageError(message)


def _feature_config(args) -> FeatureConfig:
    return FeatureConfig(
        ela_quality=args.ela_quality,
        bsif_bank=args.bsif_bank,
        svd_k=args.svd_k,
    )


def _add_feature_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ela-quality", type=int, default=feats.DEFAULT_ELA_QUALITY,
                   help="JPEG quality for the error-level residual (default 70)")
    p.add_argument("--bsif-bank", default=feats.DEFAULT_CLASSIFY_BANK,
                   help="filter bank name (e.g. 5x5_9bit) or JSON path")
    p.add_argument("--svd-k", type=int, default=feats.DEFAULT_SVD_RANK,
                   help="reconstruction rank for the singular-value residual map")


def _parse_methods(raw: str) -> list[str]:
    methods = [m.strip() for m in raw.split(",") if m.strip()]
    unknown = [m for m in methods if m not in feats.METHODS]
    if unknown:
        raise UsageError(f"unknown method(s) {unknown}; choose from {', '.join(feats.METHODS)}")
    if not methods:
        raise UsageError("no methods given")
    return methods


def cmd_preprocess(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.image:
        face = preprocess_face(load_image(args.image), record_id=Path(args.image).stem)
        faces = [face]
    else:
        manifest = load_manifest(args.manifest, missing=args.missing)
        faces = [preprocess_record(rec) for rec in manifest.records]
    from PIL import Image

    for face in faces:
        png = out_dir / f"{face.provenance}.png"
        Image.fromarray(face.pixels, mode="L").save(png, format="PNG")
        png.with_suffix(".json").write_text(
            json.dumps({"id": face.provenance, "sha256": face.sha256()}, sort_keys=True) + "\n"
        )
    print(f"wrote {len(faces)} canonical face(s) to {out_dir}")
    return EXIT_OK


def cmd_extract(args) -> int:
    methods = _parse_methods(args.methods)
    config = _feature_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.image:
        ids = [Path(args.image).stem]
        faces = [preprocess_face(load_image(args.image), record_id=ids[0])]
    else:
        manifest = load_manifest(args.manifest, missing=args.missing)
        ids = manifest.ids()
        faces = [preprocess_record(rec) for rec in manifest.records]
    for method in methods:
        matrix = np.stack([feats.extract(face, method, config)[1].values for face in faces])
        if args.format == "csv":
            featureio.write_vectors_csv(out_dir / f"{method}.csv", ids, method, matrix)
        else:
            featureio.write_vectors_npz(out_dir / f"{method}.npz", ids, method, matrix)
        print(f"{method}: {matrix.shape[0]} vectors of dim {matrix.shape[1]}")
    return EXIT_OK


def _labels_for(ids: list[str], manifest_path: str, missing: str) -> list[str]:
    manifest = load_manifest(manifest_path, missing=missing)
    return [manifest.get(i).label for i in ids]


def cmd_train(args) -> int:
    ids, method, matrix = featureio.read_vectors(args.features)
    labels = _labels_for(ids, args.manifest, args.missing)
    params = ForestParams(
        n_trees=args.n_trees,
        max_depth=args.max_depth,
        min_samples_leaf=args.min_samples_leaf,
        features_per_split=args.features_per_split,
        bootstrap=not args.no_bootstrap,
        balanced=args.balanced,
        seed=args.seed,
    )
    model = train_forest(matrix, labels, params=params, ids=ids, method=method)
    save_model(model, args.out)
    print(f"trained {params.n_trees} trees on {len(ids)} samples (dim {model.feature_dim}) -> {args.out}")
    return EXIT_OK


def cmd_score(args) -> int:
    model = load_model(args.model)
    ids, _, matrix = featureio.read_vectors(args.features)
    scores = predict_scores(model, matrix, ids=ids)
    lines = ["id,label,score"]
    labels = dict(zip(ids, _labels_for(ids, args.manifest, args.missing))) if args.manifest else {}
    for s in scores:
        lines.append(f"{s.id},{labels.get(s.id, 'unknown')},{s.value!r}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"scored {len(scores)} samples -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    scores = read_scores_csv(args.scores)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    curve = det_curve(scores)
    report = metrics_report(scores)
    write_det_csv(curve, out_dir / "det.csv")
    write_report_json(report, out_dir / "report.json")
    (out_dir / "thresholds.json").write_text(
        json.dumps(operating_thresholds(curve), sort_keys=True, indent=1) + "\n"
    )
    from morphdet.render import det_plot

    det_plot([(args.label, curve, report.eer)], out_dir / "det.png")
    print(
        f"eer={report.eer:.4f} bpcer10={report.bpcer10:.4f} bpcer20={report.bpcer20:.4f} -> {out_dir}"
    )
    return EXIT_OK


def cmd_loo(args) -> int:
    try:
        config = RunConfig.from_json(args.config)
    except ProtocolError as exc:
        # a config that cannot even be parsed is a usage problem, not a data one
        raise UsageError(str(exc)) from exc
    report = run_loo(config)
    out_dir = Path(config.out_dir)
    summary = summarize(report)
    from morphdet.metrics import MetricsError  # noqa: F401  (plot failures -> data errors)
    from morphdet.render import det_plot, summary_plot

    if not args.no_plots:
        plots = out_dir / "plots"
        plots.mkdir(parents=True, exist_ok=True)
        for rnd in report.plan.rounds:
            for feature in report.plan.features:
                curves = []
                for test_tool in rnd.test_sets:
                    cell = report.cell(rnd.held_out, test_tool, feature)
                    if cell.report is None:
                        continue
                    cell_dir = out_dir / "cells" / rnd.held_out / feature
                    scores = read_scores_csv(cell_dir / f"{test_tool}.scores.csv")
                    curves.append((test_tool, det_curve(scores), cell.report.eer))
                if curves:
                    det_plot(
                        curves,
                        plots / f"det_{rnd.held_out}_{feature}.png",
                        title=f"held out: {rnd.held_out} | {feature}",
                    )
        if summary["rounds"]:
            summary_plot(summary, plots / "summary.png")
    n_failed = len(summary["failures"])
    n_cells = len(report.cells)
    print(f"completed {n_cells - n_failed}/{n_cells} cells -> {out_dir}")
    return EXIT_OK


def cmd_visualize(args) -> int:
    methods = _parse_methods(args.methods)
    config = _feature_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    image_id = Path(args.image).stem
    face = preprocess_face(load_image(args.image), record_id=image_id)
    from morphdet.render import contact_sheet, map_to_uint8, save_map_png

    tiles: list[tuple[str, np.ndarray]] = [("input", face.pixels)]
    failures: list[str] = []
    for method in methods:
        try:
            fmap, _ = feats.extract(face, method, config)
            if fmap is None:
                raise FeatureError(f"{method} has no 2-D map to render")
            save_map_png(fmap, out_dir / f"{image_id}_{method}.png")
            tiles.append((method, map_to_uint8(fmap)))
        except FeatureError as exc:
            failures.append(f"{method}: {exc}")
            print(f"render failed for {method}: {exc}", file=sys.stderr)
    contact_sheet(tiles, out_dir / f"{image_id}_sheet.png")
    print(f"rendered {len(tiles) - 1}/{len(methods)} maps for {image_id} -> {out_dir}")
    return EXIT_OK


def cmd_serve(args) -> int:
    state = ServiceState(
        models=load_models_dir(args.models),
        config=_feature_config(args),
        static_dir=Path(args.static) if args.static else None,
    )
    try:
        serve_forever(state, args.host, args.port)
    except OSError as exc:
        raise ServiceError(f"cannot bind {args.host}:{args.port}: {exc}") from exc
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="morphdet", description=__doc__)
    parser.add_argument("--version", action="version", version=f"morphdet {morphdet.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="normalise images to canonical 180x240 faces")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", help="manifest CSV")
    src.add_argument("--image", help="single image file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--missing", default="fail", choices=["fail", "warn", "ignore"])
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("extract", help="extract feature vectors")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest")
    src.add_argument("--image")
    p.add_argument("--methods", required=True, help="comma-separated method names")
    p.add_argument("--out", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "npz"])
    p.add_argument("--missing", default="fail", choices=["fail", "warn", "ignore"])
    _add_feature_params(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a random forest on extracted vectors")
    p.add_argument("--features", required=True, help="vectors file (.csv or .npz)")
    p.add_argument("--manifest", required=True, help="manifest supplying labels")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--n-trees", type=int, default=300)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--features-per-split", default="sqrt")
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--balanced", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--missing", default="fail", choices=["fail", "warn", "ignore"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score vectors with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", help="optional manifest for labels in the output CSV")
    p.add_argument("--missing", default="fail", choices=["fail", "warn", "ignore"])
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="detection-error metrics from a scores CSV")
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--label", default="scores", help="curve label in the DET plot")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("loo", help="run the leave-one-tool-out protocol")
    p.add_argument("--config", required=True, help="run configuration JSON")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_loo)

    p = sub.add_parser("visualize", help="render feature-map gallery for one image")
    p.add_argument("--image", required=True)
    p.add_argument("--methods", required=True)
    p.add_argument("--out", required=True)
    _add_feature_params(p)
    p.set_defaults(func=cmd_visualize)

    p = sub.add_parser("serve", help="run the HTTP inspection service")
    p.add_argument("--models", required=True, help="directory of model JSON files")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--static", help="optional static asset directory for the UI")
    _add_feature_params(p)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
