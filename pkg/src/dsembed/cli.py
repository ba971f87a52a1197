"""Command-line pipeline: build -> train -> query / export.

Stages communicate through files so an externally built similarity matrix
can be dropped in before `train`. Exit codes: 0 success, 2 configuration
error, 3 input error, 4 numerical collapse, 5 word lookup failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus, query, solver
from .errors import ConfigError, DsembedError, InputError

PRUNED_FILENAME = "pruned.tsv"


def _echo_config(path: Path, args: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(args, f, indent=2, sort_keys=True)
        f.write("\n")


def cmd_build(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text = corpus.read_corpus(args.corpus)
    tokens = corpus.tokenize(text, lowercase=args.lowercase)
    vocab = corpus.build_vocab(tokens, args.max_vocab)
    counts = corpus.count_cooccurrences(tokens, vocab, args.window)
    sim = corpus.build_similarity(counts, len(vocab))
    vocab.save(out_dir / "vocab.tsv")
    sim.save(out_dir / "similarity.txt")
    _echo_config(out_dir / "build_config.json", {
        "command": "build",
        "corpus": str(args.corpus),
        "max_vocab": args.max_vocab,
        "window": args.window,
        "lowercase": args.lowercase,
        "out_dir": str(out_dir),
    })
    pruned = sim.pruned_ids()
    print(f"n={sim.n} nnz={sim.nnz // 2} pruned={len(pruned)}")
    return 0


def cmd_train(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab = corpus.Vocabulary.load(args.vocab)
    sim = corpus.SimilarityMatrix.load(args.similarity)
    if sim.n != len(vocab):
        raise InputError(
            f"similarity dimension {sim.n} does not match vocabulary size {len(vocab)}"
        )
    sub, active = sim.compact()
    pruned = np.setdiff1d(np.arange(sim.n), active)
    config = solver.TrainConfig(
        rank=args.rank,
        max_iters=args.max_iters,
        conv_tol=args.tol,
        seed=args.seed,
        objective_every=args.objective_every,
    )
    config.validate()
    if config.rank > sub.n:
        raise ConfigError(f"rank {config.rank} exceeds retained vocabulary size {sub.n}")
    result = solver.train(sub, config)

    solver.save_model(out_dir / "model.txt", result.W)
    with open(out_dir / PRUNED_FILENAME, "w", encoding="utf-8") as f:
        for wid in pruned:
            f.write(f"{int(wid)}\t{vocab.words[int(wid)]}\n")
    with open(out_dir / "train_log.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["iter", "objective", "max_row_sum_err", "max_delta"])
        for row in result.log_rows:
            writer.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])
    from .plots import save_objective_trace

    save_objective_trace(result.trace, out_dir / "train_objective.png")
    _echo_config(out_dir / "train_config.json", {
        "command": "train",
        "similarity": str(args.similarity),
        "vocab": str(args.vocab),
        "rank": config.rank,
        "max_iters": config.max_iters,
        "conv_tol": config.conv_tol,
        "simplex_tol": config.simplex_tol,
        "seed": config.seed,
        "objective_every": config.objective_every,
        "threads": args.threads,
        "out_dir": str(out_dir),
    })
    status = "converged" if result.converged else "max_iters reached"
    print(
        f"n={result.W.shape[0]} r={result.W.shape[1]} iters={result.iterations} "
        f"({status}) objective={result.trace[-1]:.6f} "
        f"simplex_residual={result.simplex_residual:.3e} pruned={len(pruned)}"
    )
    return 0


def _load_model_and_mapping(args) -> tuple[np.ndarray, corpus.Vocabulary, np.ndarray | None]:
    W = solver.load_model(args.model)
    vocab = corpus.Vocabulary.load(args.vocab)
    pruned_path = Path(args.pruned) if args.pruned else Path(args.model).parent / PRUNED_FILENAME
    pruned_ids: list[int] = []
    if pruned_path.exists():
        with open(pruned_path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    pruned_ids.append(int(line.split("\t")[0]))
    active = np.setdiff1d(np.arange(len(vocab)), np.asarray(pruned_ids, dtype=np.int64))
    if len(active) != W.shape[0]:
        raise InputError(
            f"model has {W.shape[0]} rows but vocabulary retains {len(active)} words; "
            "pass the pruned-word file emitted by `train` via --pruned"
        )
    if len(active) == len(vocab):
        return W, vocab, None
    return W, vocab, active


def cmd_query(args) -> int:
    W, vocab, active = _load_model_and_mapping(args)
    metric = "cosine" if args.cosine else "model"
    table, failures = query.neighbor_table(
        W, vocab, args.words, args.k,
        active_ids=active, metric=metric, with_scores=args.with_scores,
    )
    if table:
        print(table)
    for word, err in failures.items():
        print(f"error: {err}", file=sys.stderr)
    return 5 if failures else 0


def cmd_export(args) -> int:
    W, vocab, active = _load_model_and_mapping(args)
    words = vocab.words if active is None else [vocab.words[int(i)] for i in active]
    out = Path(args.output)
    write_embeddings(out, words, W)
    _echo_config(out.with_suffix(out.suffix + ".config.json"), {
        "command": "export",
        "model": str(args.model),
        "vocab": str(args.vocab),
        "output": str(out),
    })
    print(f"wrote {len(words)} x {W.shape[1]} embeddings to {out}")
    return 0


def write_embeddings(path: str | Path, words: list[str], W: np.ndarray) -> None:
    """Text embedding format: `n r` header, then `word v1 ... vr` per line."""
    if len(words) != W.shape[0]:
        raise InputError("word list does not match embedding row count")
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{W.shape[0]} {W.shape[1]}\n")
        for word, row in zip(words, W):
            f.write(word + " " + " ".join(repr(float(v)) for v in row) + "\n")


def read_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise InputError(f"{path}: expected 'n r' header")
        n, r = int(header[0]), int(header[1])
        words, rows = [], np.empty((n, r))
        for i in range(n):
            parts = f.readline().split()
            if len(parts) != r + 1:
                raise InputError(f"{path}: malformed line {i + 2}")
            words.append(parts[0])
            rows[i] = [float(p) for p in parts[1:]]
    return words, rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsembed",
        description="Simplex word embeddings from doubly stochastic matrix decomposition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="corpus -> vocabulary + similarity matrix")
    p_build.add_argument("--corpus", required=True)
    p_build.add_argument("--max-vocab", type=int, default=20000)
    p_build.add_argument("--window", type=int, default=8,
                         help="co-occurrence window, tokens per side")
    case = p_build.add_mutually_exclusive_group()
    case.add_argument("--lowercase", dest="lowercase", action="store_true", default=True)
    case.add_argument("--keep-case", dest="lowercase", action="store_false")
    p_build.add_argument("--out-dir", required=True)
    p_build.set_defaults(func=cmd_build)

    p_train = sub.add_parser("train", help="similarity matrix -> embedding model")
    p_train.add_argument("--similarity", required=True)
    p_train.add_argument("--vocab", required=True)
    p_train.add_argument("--rank", type=int, default=200)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--max-iters", type=int, default=500)
    p_train.add_argument("--tol", type=float, default=1e-6)
    p_train.add_argument("--objective-every", type=int, default=1)
    p_train.add_argument("--threads", type=int, default=1,
                         help="reserved; the solver runs deterministically single-threaded")
    p_train.add_argument("--out-dir", required=True)
    p_train.set_defaults(func=cmd_train)

    p_query = sub.add_parser("query", help="k-nearest-neighbor word lookup")
    p_query.add_argument("--model", required=True)
    p_query.add_argument("--vocab", required=True)
    p_query.add_argument("--pruned", default=None,
                         help="pruned-word file; defaults to pruned.tsv next to the model")
    p_query.add_argument("--k", type=int, default=7)
    p_query.add_argument("--with-scores", action="store_true")
    p_query.add_argument("--cosine", action="store_true",
                         help="rank by cosine over embedding rows instead of the model similarity")
    p_query.add_argument("words", nargs="+")
    p_query.set_defaults(func=cmd_query)

    p_export = sub.add_parser("export", help="model -> text embedding file")
    p_export.add_argument("--model", required=True)
    p_export.add_argument("--vocab", required=True)
    p_export.add_argument("--pruned", default=None)
    p_export.add_argument("--output", required=True)
    p_export.set_defaults(func=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DsembedError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
