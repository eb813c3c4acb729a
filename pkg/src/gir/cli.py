"""Command-line interface: ``gir index|search|evaluate|sweep|synth``.

Exit status is 0 on success, 1 on runtime errors and 2 on usage errors.
Option defaults can be set in ``gir.conf`` (``key=value`` lines, keys named
after the long options, ``param.<name>=value`` for model parameters) in the
working directory; command-line flags take precedence.  ``GIR_WORKERS``
supplies ``--workers`` when neither the flag nor the config file does.
"""

from __future__ import annotations

import argparse
import logging
import multiprocessing
import os
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import evaluation, synthetic
from .errors import GirError
from .index import build_index, load_index, save_index
from .models import MODEL_IDS, ModelParams
from .search import DEFAULT_K, RunFile, run_topics
from .text import FIELD_MODES, Analyzer
from .trec_io import parse_qrels, parse_topics, read_collection

log = logging.getLogger("gir")

CONFIG_FILE = "gir.conf"


class UsageError(Exception):
    pass


def read_config(path: str | os.PathLike = CONFIG_FILE) -> dict[str, str]:
    cfg: dict[str, str] = {}
    p = Path(path)
    if not p.is_file():
        return cfg
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{p}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _parse_params(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise UsageError(f"--param expects key=value, got {pair!r}")
        k, v = pair.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _model_params(args) -> ModelParams:
    merged = dict(args.config_params)
    merged.update(_parse_params(args.param))
    return ModelParams().with_overrides(merged)


def _check_model(name: str) -> str:
    if name not in MODEL_IDS:
        raise GirError(f"unknown model {name!r}; valid models: {' '.join(MODEL_IDS)}")
    return name


def _workers(args) -> int:
    if args.workers is not None:
        n = args.workers
    else:
        try:
            n = int(os.environ.get("GIR_WORKERS", "1"))
        except ValueError:
            raise UsageError("GIR_WORKERS must be an integer") from None
    if n < 1:
        raise UsageError("--workers must be >= 1")
    return n


def _existing(path: str | None, what: str) -> Path:
    if path is None or not Path(path).exists():
        raise UsageError(f"{what} not found: {path}")
    return Path(path)


def _emit(data: bytes, output: str | None) -> None:
    if output:
        Path(output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


# -- commands ----------------------------------------------------------------

def cmd_index(args) -> int:
    collection = _existing(args.collection, "collection")
    out = Path(args.output)
    occupied = any(out.iterdir()) if out.is_dir() else out.exists()
    if occupied:
        if not args.force:
            raise GirError(f"{out} already exists; use --force to overwrite")
        if out.is_dir():
            shutil.rmtree(out)
        else:
            out.unlink()
    analyzer = Analyzer.from_stoplist(_existing(args.stoplist, "stoplist") if args.stoplist else None)
    index = build_index(
        read_collection(collection),
        analyzer,
        workers=_workers(args),
        segment_docs=args.segment_docs,
    )
    save_index(index, out)
    s = index.stats
    print(f"N={s.num_docs} TC={s.total_tokens} avg_l={s.avg_doc_len:.4f} vocab={s.vocab_size}")
    return 0


def cmd_search(args) -> int:
    index_dir = _existing(args.index, "index")
    topics_path = _existing(args.topics, "topics file")
    model = _check_model(args.model)
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    params = _model_params(args)
    index = load_index(index_dir)
    topics = parse_topics(topics_path.read_bytes())
    run = run_topics(index, model, params, topics, args.fields, args.k, args.tag)
    _emit(run.to_bytes(), args.output)
    return 0


def cmd_evaluate(args) -> int:
    qrels = parse_qrels(_existing(args.qrels, "qrels file").read_bytes())
    run = evaluation.load_run(_existing(args.run, "run file").read_bytes())
    try:
        measures = evaluation.select_measures(args.measures)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = evaluation.evaluate_run(run, qrels)
    if report.excluded:
        log.warning("topics without relevant judgments excluded: %s", " ".join(report.excluded))
    if args.format == "tsv":
        text = evaluation.report_tsv(report, measures)
    else:
        text = evaluation.report_table(report, measures)
    sys.stdout.write(text)
    if args.curve:
        Path(args.curve).write_text(evaluation.curve_tsv(report.curve), encoding="utf-8")
    return 0


# sweep workers receive shared state through fork, or load it in the initializer
_sweep_state: dict = {}


def _sweep_init(index_dir: str, topics_path: str) -> None:
    if "index" not in _sweep_state:
        _sweep_state["index"] = load_index(index_dir)
        _sweep_state["topics"] = parse_topics(Path(topics_path).read_bytes())


def _sweep_cell(model: str, mode: str, params: ModelParams, k: int) -> tuple[bytes | None, str | None]:
    try:
        run = run_topics(_sweep_state["index"], model, params, _sweep_state["topics"], mode, k,
                         tag=f"{model}.{mode}")
        return run.to_bytes(), None
    except Exception as exc:  # reported per cell; the sweep continues
        return None, f"{type(exc).__name__}: {exc}"


def cmd_sweep(args) -> int:
    index_dir = _existing(args.index, "index")
    topics_path = _existing(args.topics, "topics file")
    qrels = parse_qrels(_existing(args.qrels, "qrels file").read_bytes())
    if args.models.strip() == "all":
        models = list(MODEL_IDS)
    else:
        models = [_check_model(m.strip()) for m in args.models.split(",") if m.strip()]
    modes = [f.strip() for f in args.fields.split(",") if f.strip()]
    for f in modes:
        if f not in FIELD_MODES:
            raise UsageError(f"unknown field mode {f!r}; expected some of {','.join(FIELD_MODES)}")
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    params = _model_params(args)
    workers = _workers(args)

    _sweep_state.clear()
    _sweep_init(str(index_dir), str(topics_path))
    cells = [(m, f) for m in models for f in modes]
    if workers > 1:
        methods = multiprocessing.get_all_start_methods()
        ctx = multiprocessing.get_context("fork" if "fork" in methods else None)
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx, initializer=_sweep_init,
                                 initargs=(str(index_dir), str(topics_path))) as pool:
            futures = [pool.submit(_sweep_cell, m, f, params, args.k) for m, f in cells]
            results = [fut.result() for fut in futures]
    else:
        results = [_sweep_cell(m, f, params, args.k) for m, f in cells]

    out = Path(args.out) if args.out else None
    if out:
        (out / "runs").mkdir(parents=True, exist_ok=True)
    runs: dict[tuple[str, str], RunFile | None] = {}
    failed = 0
    for (model, mode), (data, err) in zip(cells, results):
        if err is not None:
            failed += 1
            log.error("%s/%s failed: %s", model, mode, err)
            runs[(model, mode)] = None
            continue
        if out:
            (out / "runs" / f"{model}.{mode}.run").write_bytes(data)
        # evaluate the run as written, so numbers match `gir evaluate` on the file
        runs[(model, mode)] = evaluation.load_run(data) if data else None
    matrix = evaluation.comparison_matrix(runs, qrels, models, modes)
    text = matrix.to_text()
    if out:
        (out / "map_matrix.txt").write_text(text, encoding="utf-8")
        (out / "map_matrix.tsv").write_text(matrix.to_tsv(), encoding="utf-8")
    sys.stdout.write(text)
    return 1 if failed else 0


def cmd_synth(args) -> int:
    coll = synthetic.generate(
        num_docs=args.docs,
        num_topics=args.topics,
        vocab_size=args.vocab,
        avg_len=args.avg_len,
        seed=args.seed,
    )
    paths = synthetic.write_collection(coll, args.out)
    for k, v in paths.items():
        print(f"{k}={v}")
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gir", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build an index from a TREC document collection")
    p.add_argument("--collection", required=True, help="SGML file or directory of files")
    p.add_argument("--output", required=True, help="index directory to create")
    p.add_argument("--stoplist", help="UTF-8 stoplist, one term per line")
    p.add_argument("--workers", type=int, help="tokenisation processes")
    p.add_argument("--segment-docs", type=int, default=50_000, help="documents per spill segment")
    p.add_argument("--force", action="store_true", help="overwrite an existing output")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="run topics against an index, write a TREC run")
    p.add_argument("--index", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--model", required=True, help="one of: " + " ".join(MODEL_IDS))
    p.add_argument("--fields", required=True, choices=FIELD_MODES)
    p.add_argument("--k", type=int, default=DEFAULT_K, help="documents per topic")
    p.add_argument("--tag", default="gir", help="run tag (last column)")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--output", help="run file path (default: stdout)")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="score a run against qrels")
    p.add_argument("--qrels", required=True)
    p.add_argument("--run", required=True)
    p.add_argument("--measures", default="all", help="all, or comma list of " + ",".join(evaluation.MEASURES))
    p.add_argument("--format", choices=("table", "tsv"), default="table")
    p.add_argument("--curve", help="write the 11-point interpolated P-R curve as TSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="every model x field mode: run files and MAP matrix")
    p.add_argument("--index", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--models", default="all")
    p.add_argument("--fields", default="T,TD,TDN")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="directory for run files and the matrix")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic Zipf collection with topics and qrels")
    p.add_argument("--out", required=True)
    p.add_argument("--docs", type=int, default=10_000)
    p.add_argument("--topics", type=int, default=25)
    p.add_argument("--vocab", type=int, default=20_000)
    p.add_argument("--avg-len", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def _apply_config(parser: argparse.ArgumentParser, cfg: dict[str, str]) -> dict[str, str]:
    params = {k[len("param."):]: v for k, v in cfg.items() if k.startswith("param.")}
    plain = {k: v for k, v in cfg.items() if not k.startswith("param.")}
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            for a in sp._actions:
                if a.dest in plain and a.dest not in ("help", "param"):
                    value = plain[a.dest]
                    if a.const is True:  # store_true flags
                        value = value.lower() in ("1", "true", "yes", "on")
                    a.default = value
                    a.required = False
    return params


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        cfg_params = _apply_config(parser, read_config())
    except UsageError as exc:
        print(f"gir: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="gir: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    args.config_params = cfg_params
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gir: error: {exc}", file=sys.stderr)
        return 2
    except (GirError, OSError, ValueError) as exc:
        print(f"gir: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
