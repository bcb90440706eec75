import argparse
import json
import os
import sys

import pandas as pd

from bilexical.BilinearModel import factorize
from bilexical.errors import BilexicalError, InvalidArgument
from bilexical.Evaluator import (
    eval_model,
    eval_unsupervised,
    query_neighbors,
    read_reports,
    reports_frame,
    select_best,
    summary_row,
    summary_table,
    top_candidates,
    tradeoff_curve,
    write_curve,
    write_reports,
)
from bilexical.FobosTrainer import TrainConfig, TrainedModel, sweep, tau_grid, train
from bilexical.ModelArchive import ENCODINGS, load_model, save_model
from bilexical.RelationDataset import (
    DEFAULT_RATIOS,
    RelationFeatures,
    RelationPattern,
    extract_pairs_conll,
    parse_pairs,
    read_dataset,
    split_dataset,
    write_dataset,
    write_pairs,
)
from bilexical.Representation import (
    BowConfig,
    build_bow,
    export_vectors,
    import_vectors,
    read_corpus,
)
from bilexical.settings import load_settings
from bilexical.Synthetic import make_planted_relation

SWEEP_REPORT = "sweep.csv"
SWEEP_COLUMNS = ["label", "regularizer", "tau", "dev_acc", "rank_or_nnz", "ops", "selected_epoch", "model", "error"]
# TrainConfig fields that can be set one by one on the command line
CONFIG_FLAGS = ["regularizer", "tau", "step0", "schedule", "epochs", "batch_size", "prox_period",
                "early_stop_patience"]


class Pipeline:
    """Shared state of one CLI invocation: settings, train config, output helpers"""
    def __init__(self, args, settings):
        self.args = args
        # --seed when given, else BILEX_SEED / 0
        self.seed = args.seed if args.seed is not None else settings.seed
        self.verbose = args.verbose
        self.format = args.format
        self.intermediate_dir = args.intermediate_dir
        if self.intermediate_dir:
            os.makedirs(self.intermediate_dir, exist_ok=True)

    def save_intermediate(self, data, filename):
        """Save a step's result into the intermediate folder, if one is configured"""
        if not self.intermediate_dir:
            return None
        file_path = os.path.join(self.intermediate_dir, filename)
        with open(file_path, "w", encoding="utf-8") as f:
            if isinstance(data, str):
                f.write(data)
            else:
                json.dump(data, f, indent=2, sort_keys=True)
        print(f"Saved intermediate result to {file_path}")
        return file_path

    def train_config(self, **overrides):
        """--config file, then individual flags; an explicit --seed beats a seed in the file"""
        data = {}
        if self.args.config:
            with open(self.args.config, "r", encoding="utf-8") as f:
                data = json.load(f)
            if not isinstance(data, dict):
                raise InvalidArgument(f"{self.args.config} must hold a JSON object of TrainConfig fields")
        for name in CONFIG_FLAGS:
            value = getattr(self.args, name, None)
            if value is not None:
                data[name] = value
        if getattr(self.args, "full_batch", False):
            data["batch_size"] = None
        if self.args.seed is not None:
            data["seed"] = self.args.seed
        else:
            data.setdefault("seed", self.seed)
        data.update(overrides)
        return TrainConfig.from_dict(data)

    def features(self):
        dataset = read_dataset(self.args.dataset)
        query_rep = import_vectors(self.args.repr)
        candidate_rep = import_vectors(self.args.candidate_repr) if self.args.candidate_repr else None
        return RelationFeatures(dataset, query_rep, candidate_rep)

    def report_path(self, path):
        if path.endswith(".json") or path.endswith(".csv"):
            return path
        return f"{path}.{self.format}"


def cmd_build_repr(p, args):
    cfg = BowConfig(window=args.window, dim=args.dim, min_count=args.min_count, weighting=args.weighting)
    rep = build_bow(read_corpus(args.corpus), cfg, name=args.name, verbose=p.verbose)
    export_vectors(rep, args.out)
    for note in rep.warnings:
        print(f"Warning: {note}")
    print(f"Wrote {len(rep.vocab)} vectors of dim {rep.dim} to {args.out}")
    p.save_intermediate({"words": len(rep.vocab), "dim": rep.dim, "fingerprint": rep.fingerprint(),
                         "contexts": list(rep.context_labels), "warnings": rep.warnings}, "1_representation.json")


def cmd_import_vectors(p, args):
    rep = import_vectors(args.vectors, name=args.name)
    print(f"Read {len(rep.vocab)} vectors of dim {rep.dim}, fingerprint {rep.fingerprint()}")
    if args.out:
        export_vectors(rep, args.out)
        print(f"Wrote normalized copy to {args.out}")


def cmd_extract_pairs(p, args):
    pattern = RelationPattern.parse(args.pattern, query_side=args.query_side)
    pairs = extract_pairs_conll(args.conll, pattern, verbose=p.verbose)
    write_pairs(pairs, args.out)
    print(f"Wrote {len(pairs)} pairs to {args.out}")


def cmd_split(p, args):
    seed = args.split_seed if args.split_seed is not None else p.seed
    dataset = split_dataset(parse_pairs(args.pairs), ratios=tuple(args.ratios), seed=seed)
    write_dataset(dataset, args.out)
    sizes = dataset.split_sizes()
    print(f"Split {len(dataset.queries)} query words: " + ", ".join(f"{s}={n}" for s, n in sizes.items()))
    p.save_intermediate({"split_sizes": sizes, "candidates": len(dataset.candidates)}, "2_split.json")


def cmd_train(p, args):
    features = p.features()
    cfg = p.train_config()
    # Train, then save the archive and optional per-epoch history
    result = train(cfg, features.dataset, features.query_rep, features.candidate_rep, verbose=p.verbose)
    save_model(result, args.out, encoding=args.encoding)
    if args.history:
        result.write_history(args.history)
    print(f"Trained {cfg.label}: {result.model.describe()}, dev_acc={result.dev_accuracy:.4f} "
          f"(epoch {result.selected_epoch}); saved to {args.out}")
    p.save_intermediate({"config": cfg.to_dict(), "selected_epoch": result.selected_epoch,
                         "history": result.history}, "3_training.json")


def _sweep_configs(p, args):
    cfgs = []
    for reg in args.regularizers:
        cfgs.extend(tau_grid(reg, args.taus, base=p.train_config(regularizer=reg)))
    return cfgs


def cmd_sweep(p, args):
    features = p.features()
    os.makedirs(args.out_dir, exist_ok=True)
    # 1. Train every (regularizer, tau) cell
    results = sweep(_sweep_configs(p, args), features, verbose=p.verbose)

    # 2. Save successful models and one report row per cell
    rows = []
    for r in results:
        model_file = f"{r.config.label}.model"
        row = {"label": r.config.label, "regularizer": r.config.regularizer, "tau": r.config.tau,
               "error": r.error or ""}
        if r.ok:
            save_model(r, os.path.join(args.out_dir, model_file), encoding=args.encoding)
            row.update(dev_acc=r.dev_accuracy, rank_or_nnz=r.complexity, ops=r.ops,
                       selected_epoch=r.selected_epoch, model=model_file)
        rows.append(row)
    frame = pd.DataFrame(rows).reindex(columns=SWEEP_COLUMNS)
    path = os.path.join(args.out_dir, SWEEP_REPORT)
    frame.to_csv(path, index=False)

    # 3. Pick the best cell on dev
    best = select_best(results, tolerance=args.tolerance)
    print(f"Swept {len(results)} configs into {args.out_dir}; "
          + (f"best on dev: {best.config.label} ({best.dev_accuracy:.4f})" if best else "every cell failed"))


def load_sweep(sweep_dir, features):
    """TrainedModel per row of a sweep directory's report, failed cells included"""
    frame = pd.read_csv(os.path.join(sweep_dir, SWEEP_REPORT), keep_default_na=False)
    results = []
    for row in frame.itertuples(index=False):
        if row.error:
            cfg = TrainConfig(regularizer=row.regularizer, tau=float(row.tau))
            results.append(TrainedModel(model=None, history=[], selected_epoch=0, config=cfg, error=row.error))
        else:
            results.append(load_model(os.path.join(sweep_dir, row.model), features.query_rep,
                                      features.candidate_rep))
    return results


def cmd_eval(p, args):
    features = p.features()
    reports = []
    for path in args.model:
        trained = load_model(path, features.query_rep, features.candidate_rep,
                             allow_mismatch=args.allow_mismatch)
        label = os.path.splitext(os.path.basename(path))[0]
        reports.append(eval_model(trained.model, features, split=args.split, label=label))
    out = p.report_path(args.out)
    write_reports(reports, out, p.format)
    print(reports_frame(reports).to_string(index=False))
    print(f"Wrote {len(reports)} reports to {out}")


def cmd_eval_unsup(p, args):
    features = p.features()
    pairs = features.dataset.pairs_for(args.split)
    # the baseline scores queries and candidates in one space
    rep = features.query_rep
    reports = [eval_unsupervised(rep, k, pairs, features.candidate_words) for k in args.k]
    out = p.report_path(args.out)
    write_reports(reports, out, p.format)
    print(reports_frame(reports).to_string(index=False))
    print(f"Wrote {len(reports)} reports to {out}")


def cmd_curve(p, args):
    reports = [r for path in args.reports for r in read_reports(path)]
    curve = tradeoff_curve(reports)
    out = p.report_path(args.out)
    write_curve(curve, out, p.format)
    print(curve.to_frame().to_string(index=False))
    print(f"Wrote {len(curve.points)} curve points to {out}")


def cmd_top_candidates(p, args):
    features = p.features()
    trained = load_model(args.model, features.query_rep, features.candidate_rep)
    for cand, score in top_candidates(trained.model, args.query, args.top_k, features):
        print(f"{cand}\t{score:.6f}")


def cmd_neighbors(p, args):
    embeddings = import_vectors(args.vectors)
    for word, cos in query_neighbors(embeddings, args.word, args.top_k):
        print(f"{word}\t{cos:.6f}")


def cmd_export_embeddings(p, args):
    rep = import_vectors(args.repr)
    trained = load_model(args.model)
    model = trained.model
    if model.is_dense and args.factorize:
        model = factorize(model.materialize(), query_rep_id=model.query_rep_id,
                          candidate_rep_id=model.candidate_rep_id)
    embeddings = model.export_embeddings(args.side, rep)
    export_vectors(embeddings, args.out)
    print(f"Wrote {len(embeddings.vocab)} {args.side} embeddings of dim {embeddings.dim} to {args.out}")


def cmd_planted(p, args):
    planted = make_planted_relation(n=args.n, n_queries=args.queries, n_candidates=args.candidates,
                                    rank=args.rank, per_query=args.per_query, density=args.density,
                                    signal=args.signal, seed=p.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    export_vectors(planted.rep, os.path.join(args.out_dir, "repr.txt"))
    write_dataset(planted.dataset, os.path.join(args.out_dir, "dataset.tsv"))
    print(f"Wrote planted relation ({planted.dataset}) to {args.out_dir}")


def cmd_summary(p, args):
    features = p.features()
    results = load_sweep(args.sweep_dir, features)
    # 1. Unsupervised baseline at the rank of the best nuclear cell
    unsupervised = None
    best = select_best([r for r in results if r.config.regularizer == "nuclear"])
    if best is not None:
        k = min(best.complexity or 1, features.query_rep.dim, len(features.query_rep.vocab))
        unsupervised = eval_unsupervised(features.query_rep, max(1, k),
                                         features.dataset.pairs_for(args.split), features.candidate_words)

    # 2. One table row: baseline, best nuclear and truncations, best l2 / l1
    row = summary_row(args.relation, features.query_rep.name, results, features, unsupervised,
                      split=args.split)
    table = summary_table([row])
    out = p.report_path(args.out)
    if out.endswith(".json"):
        table.to_json(out, orient="records", indent=2)
    else:
        table.to_csv(out, index=False)
    print(table.to_string(index=False))


def _add_data_args(sp):
    sp.add_argument("--dataset", required=True, help="split dataset TSV (query, candidate, count, split)")
    sp.add_argument("--repr", required=True, help="word vectors in embedding text format")
    sp.add_argument("--candidate-repr", default=None, help="separate candidate-side vectors")


def build_parser(settings):
    parser = argparse.ArgumentParser(prog="app.py", description="Learn and evaluate bilexical operators")
    parser.add_argument("--seed", type=int, default=None, help=f"defaults to BILEX_SEED ({settings.seed})")
    parser.add_argument("--config", default=None, help="JSON file with TrainConfig fields")
    parser.add_argument("--format", choices=["csv", "json"], default=settings.format)
    parser.add_argument("--verbose", action="store_true", default=settings.verbose)
    parser.add_argument("--intermediate-dir", default=settings.intermediate_dir)
    parser.add_argument("--regularizer", choices=["l1", "l2", "nuclear"], default=None)
    parser.add_argument("--tau", type=float, default=None)
    parser.add_argument("--step0", type=float, default=None)
    parser.add_argument("--schedule", choices=["constant", "inv_sqrt_t"], default=None)
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--full-batch", action="store_true")
    parser.add_argument("--prox-period", type=int, default=None)
    parser.add_argument("--early-stop-patience", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("build-repr", help="bag-of-words vectors from a tokenized corpus")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--window", type=int, default=10)
    sp.add_argument("--dim", type=int, default=2000)
    sp.add_argument("--min-count", type=int, default=0)
    sp.add_argument("--weighting", choices=["raw_count", "log1p"], default="raw_count")
    sp.add_argument("--name", default="bow")
    sp.set_defaults(func=cmd_build_repr)

    sp = sub.add_parser("import-vectors", help="validate an embedding text file")
    sp.add_argument("--vectors", required=True)
    sp.add_argument("--name", default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_import_vectors)

    sp = sub.add_parser("extract-pairs", help="pairs from dependency edges of a CoNLL corpus")
    sp.add_argument("--conll", required=True)
    sp.add_argument("--pattern", required=True, help="HEADPOS/DEPPOS/LABEL regular expressions")
    sp.add_argument("--query-side", choices=["head", "dependent"], default="head")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_extract_pairs)

    sp = sub.add_parser("split", help="partition query words into train/dev/test")
    sp.add_argument("--pairs", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--ratios", type=float, nargs=3, default=list(DEFAULT_RATIOS))
    sp.add_argument("--split-seed", type=int, default=None, help="defaults to --seed")
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("train", help="train one model")
    _add_data_args(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--history", default=None, help="CSV of per-epoch history")
    sp.add_argument("--encoding", choices=ENCODINGS, default="binary")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("sweep", help="train one model per regularizer and tau")
    _add_data_args(sp)
    sp.add_argument("--regularizers", nargs="+", choices=["l1", "l2", "nuclear"], default=["nuclear"])
    sp.add_argument("--taus", type=float, nargs="+", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--tolerance", type=float, default=0.0)
    sp.add_argument("--encoding", choices=ENCODINGS, default="binary")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("eval", help="pairwise accuracy and op count of saved models")
    _add_data_args(sp)
    sp.add_argument("--model", nargs="+", required=True)
    sp.add_argument("--split", choices=["train", "dev", "test"], default="test")
    sp.add_argument("--allow-mismatch", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("eval-unsup", help="unsupervised SVD baseline")
    _add_data_args(sp)
    sp.add_argument("--k", type=int, nargs="+", required=True)
    sp.add_argument("--split", choices=["train", "dev", "test"], default="test")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_eval_unsup)

    sp = sub.add_parser("curve", help="accuracy vs. operations from eval reports")
    sp.add_argument("--reports", nargs="+", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("top-candidates", help="best-scoring candidates for a query")
    _add_data_args(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--query", required=True)
    sp.add_argument("--top-k", type=int, default=10)
    sp.set_defaults(func=cmd_top_candidates)

    sp = sub.add_parser("neighbors", help="nearest words by cosine similarity")
    sp.add_argument("--vectors", required=True)
    sp.add_argument("--word", required=True)
    sp.add_argument("--top-k", type=int, default=10)
    sp.set_defaults(func=cmd_neighbors)

    sp = sub.add_parser("export-embeddings", help="task-specific embeddings of a factorized model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--repr", required=True)
    sp.add_argument("--side", choices=["query", "candidate"], default="query")
    sp.add_argument("--factorize", action="store_true", help="factorize a dense model first")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_export_embeddings)

    sp = sub.add_parser("planted", help="write a synthetic relation with a known low-rank operator")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--n", type=int, default=30)
    sp.add_argument("--queries", type=int, default=200)
    sp.add_argument("--candidates", type=int, default=200)
    sp.add_argument("--rank", type=int, default=3)
    sp.add_argument("--per-query", type=int, default=5)
    sp.add_argument("--density", type=float, default=0.3)
    sp.add_argument("--signal", type=float, default=4.0)
    sp.set_defaults(func=cmd_planted)

    sp = sub.add_parser("summary", help="results-table row from a sweep directory")
    _add_data_args(sp)
    sp.add_argument("--sweep-dir", required=True)
    sp.add_argument("--relation", required=True)
    sp.add_argument("--split", choices=["train", "dev", "test"], default="test")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_summary)
    return parser


def main(argv=None):
    try:
        settings = load_settings()
        args = build_parser(settings).parse_args(argv)
        args.func(Pipeline(args, settings), args)
    except BilexicalError as e:
        print(f"Error: {e}")
        return 1
    except FileNotFoundError as e:
        print(f"Error: file not found: {e.filename}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
