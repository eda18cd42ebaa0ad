"""Command-line entry point.

Subcommands: validate, oracle, targets, train, summarize, evaluate,
baseline.  A ``--config`` file (key = value lines, keys matching flag
names) may supply any flag; explicit flags override.  Exit codes:
0 success, 1 usage error, 2 data error, 3 numeric failure.  Errors are
emitted as one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from . import evaluation as ev
from . import oracle as oracle_mod
from . import salience as sal
from . import selection as sel
from .context import FrequencyTracker
from .embed import EMBED_DIM, EmbeddingError, EmbeddingProvider, load_store
from .ingest import DataError, partition_increments, read_gold, read_stream
from .preprocess import Vocab, VocabError

log = logging.getLogger("tweetsumm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def _load_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, argv, args):
    """Fill unset flags from the config file, honoring argparse types."""
    if not getattr(args, "config", None):
        return args
    values = _load_config_file(args.config)
    explicit = {a.lstrip("-").replace("-", "_").split("=")[0] for a in argv if a.startswith("--")}
    for action in parser._actions:
        if action.dest in values and action.dest not in explicit:
            raw = values[action.dest]
            if action.type is not None:
                raw = action.type(raw)
            elif isinstance(action.const, bool) or isinstance(action.default, bool):
                raw = raw.lower() in ("1", "true", "yes")
            setattr(args, action.dest, raw)
    return args


def _group_events(tweets):
    events: dict[str, list] = {}
    for t in tweets:
        events.setdefault(t.event_id, []).append(t)
    return {e: events[e] for e in sorted(events)}


def _sif_params(args, corpus_texts):
    if getattr(args, "word_vectors", None) and getattr(args, "word_probs", None):
        return ev.SIFParams(
            word_vectors=ev.load_word_vectors(args.word_vectors),
            word_probs=ev.load_word_probs(args.word_probs),
            remove_pc=not getattr(args, "no_remove_pc", False),
        )
    return ev.sif_fallback_params(
        corpus_texts,
        dim=getattr(args, "sif_dim", 50),
        seed=getattr(args, "seed", 0) or 0,
        remove_pc=not getattr(args, "no_remove_pc", False),
    )


def _parse_cap(cap: str):
    kind, _, value = cap.partition(":")
    if kind == "tweets":
        return sel.SelectionConfig(cap_mode="tweets", tweet_cap=int(value or 20))
    if kind == "words":
        if value == "gold" or value == "":
            return sel.SelectionConfig(cap_mode="words", word_budget_per_day=None)
        return sel.SelectionConfig(cap_mode="words", word_budget_per_day=int(value))
    raise UsageError(f"bad --cap value {cap!r}; expected tweets:N or words:gold|N")


# ---------------------------------------------------------------------------
# commands

def cmd_validate(args):
    tweets = read_stream(args.stream)
    events = _group_events(tweets)
    lines = [f"events: {len(events)}", f"tweets: {len(tweets)}"]
    total_days = 0
    for event_id, ts in events.items():
        incs = partition_increments(ts)
        total_days += len(incs)
        lines.append(f"  {event_id}: {len(ts)} tweets over {len(incs)} days")
    if events:
        lines.append(f"days: {total_days}")
        lines.append(f"mean tweets/event: {len(tweets) / len(events):.1f}")
    if args.gold:
        gold = read_gold(args.gold)
        lengths = [len(t.split()) for t in gold.entries.values()]
        lines.append(f"gold entries: {len(gold)}")
        if lengths:
            lines.append(f"mean gold length (words): {float(np.mean(lengths)):.1f}")
    if args.vocab:
        vocab = Vocab.load(args.vocab)
        lines.append(f"vocab: {len(vocab)} tokens, frequency dim {vocab.freq_dim}")
    if args.embeddings:
        store = load_store(args.embeddings)
        lines.append(f"embeddings: {len(store)} records, dim {store.dimension}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_oracle(args):
    tweets = read_stream(args.stream)
    gold = read_gold(args.gold)
    sif_params = _sif_params(args, [t.text for t in tweets] + list(gold.entries.values()))
    rows = []
    for event_id, ts in _group_events(tweets).items():
        for inc, batch in partition_increments(ts):
            gold_text = gold.get(event_id, inc.day_index)
            if gold_text is None:
                continue
            budget = args.word_budget or len(gold_text.split())
            for metric in ("rouge2_f", "cosine"):
                ids = oracle_mod.greedy_oracle(batch, gold_text, metric, budget, sif_params)
                rows.append((event_id, inc.day_index, metric, ids))
    oracle_mod.write_oracle(args.out, rows)
    print(f"wrote {len(rows)} oracle rows to {args.out}")
    return EXIT_OK


def cmd_targets(args):
    tweets = read_stream(args.stream)
    gold = read_gold(args.gold)
    vocab = Vocab.load(args.vocab)
    store = load_store(args.embeddings) if args.embeddings else None
    provider = EmbeddingProvider(store, dim=store.dimension if store else args.embed_dim)
    oracle_ids = oracle_mod.read_oracle_ids(args.oracle) if args.oracle else set()
    sif_params = _sif_params(args, [t.text for t in tweets] + list(gold.entries.values()))

    examples = []
    for event_id, ts in _group_events(tweets).items():
        examples.extend(
            sal.build_targets(ts, gold, oracle_ids, vocab, provider, sif_params)
        )
    freq = np.stack([ex.freq for ex in examples]).astype(np.float32)
    emb = np.stack([ex.emb for ex in examples]).astype(np.float32)
    targets = np.array([ex.target for ex in examples], dtype=np.float32)
    ids = np.array([ex.tweet_id for ex in examples], dtype=np.uint64)
    events = np.array([ex.event_id for ex in examples])
    np.savez(args.out, freq=freq, emb=emb, targets=targets, ids=ids, events=events)
    print(f"wrote {len(examples)} training examples to {args.out}")
    return EXIT_OK


def _train_config(args, freq_dim, emb_dim):
    net = sal.NetConfig(
        freq_dim=freq_dim,
        emb_dim=emb_dim,
        hidden_freq=args.hidden,
        hidden_joint=args.hidden,
        dropout_p=args.dropout,
    )
    return sal.TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        d_model=emb_dim + args.hidden,
        warmup=args.warmup,
        lr_scale=args.lr_scale,
        net=net,
    )


def cmd_train(args):
    data = np.load(args.targets, allow_pickle=False)
    freq = data["freq"].astype(np.float64)
    emb = data["emb"].astype(np.float64)
    targets = data["targets"].astype(np.float64)
    ids = data["ids"]
    events = data["events"]
    examples = [
        sal.TrainingExample(freq[i], emb[i], float(targets[i]), int(ids[i]), str(events[i]))
        for i in range(len(targets))
    ]
    config = _train_config(args, freq.shape[1], emb.shape[1])

    if args.folds:
        by_event: dict[str, list] = {}
        for ex in examples:
            by_event.setdefault(ex.event_id, []).append(ex)
        nets, predictions, assignment = sal.cross_validate(by_event, args.folds, config)
        for i, net in enumerate(nets):
            sal.save_net(f"{args.out}.fold{i}", net)
        with open(args.log, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "folds": [sorted(f) for f in assignment],
                    "predictions": {
                        e: {str(k): v for k, v in sorted(p.items())}
                        for e, p in sorted(predictions.items())
                    },
                },
                fh,
                sort_keys=True,
                indent=2,
            )
        print(f"wrote {len(nets)} fold checkpoints to {args.out}.fold*")
    else:
        net, history = sal.train(examples, config)
        sal.save_net(args.out, net)
        with open(args.log, "w", encoding="utf-8") as fh:
            json.dump({"history": history}, fh, sort_keys=True, indent=2)
        print(f"wrote checkpoint to {args.out}")
    return EXIT_OK


def cmd_summarize(args):
    tweets = read_stream(args.stream)
    vocab = Vocab.load(args.vocab)
    net, _ = sal.load_net(args.checkpoint)
    store = load_store(args.embeddings) if args.embeddings else None
    provider = EmbeddingProvider(store, dim=store.dimension if store else net.config.emb_dim)
    gold = read_gold(args.gold) if args.gold else None
    config = _parse_cap(args.cap)
    config.lambda_salience = args.lambda_salience
    config.lambda_sim_base = args.lambda_similarity

    manifest = {
        "command": "summarize",
        "version": __version__,
        "lambda_salience": config.lambda_salience,
        "lambda_similarity": config.lambda_sim_base,
        "cap": args.cap,
        "seed": args.seed,
        "checkpoint": args.checkpoint,
        "stream": args.stream,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"manifest": manifest}, sort_keys=True) + "\n")
        for event_id, ts in _group_events(tweets).items():
            tracker = FrequencyTracker(vocab, event_id)
            summary, _, _ = sel.summarize_event(
                ts, net, tracker, config, provider, vocab, gold=gold
            )
            for e in summary.entries:
                fh.write(
                    json.dumps(
                        {
                            "event": event_id,
                            "day": e.day_index,
                            "id": e.tweet_id,
                            "salience": e.salience,
                            "text": e.text,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
    print(f"wrote summary to {args.out}")
    return EXIT_OK


def _read_summary_file(path):
    """(event, day) -> concatenated text, skipping the manifest header."""
    texts: dict[tuple[str, int], list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "manifest" in rec:
                continue
            texts.setdefault((rec["event"], int(rec["day"])), []).append(rec["text"])
    return {k: " ".join(v) for k, v in texts.items()}


def _score_system(day_texts, gold, sif_params, pc):
    scores = []
    for (event_id, day_index), gold_text in sorted(gold.entries.items()):
        cand = day_texts.get((event_id, day_index), "")
        scores.append(ev.score_day(event_id, day_index, cand, gold_text, sif_params, pc))
    return scores


def cmd_evaluate(args):
    gold = read_gold(args.gold)
    systems = {}
    for spec_ in args.summary:
        name, _, path = spec_.partition("=")
        if not path:
            name, path = path or name, name
        systems[name] = _read_summary_file(path)

    corpus = list(gold.entries.values())
    for day_texts in systems.values():
        corpus.extend(day_texts.values())
    sif_params = _sif_params(args, corpus)
    pc = None
    if sif_params.remove_pc:
        vecs = [ev.sif_embed(t, sif_params) for t in corpus]
        pc = ev.first_principal_component(vecs)

    report = {"systems": {}, "significance": {}}
    per_system_scores = {}
    for name, day_texts in systems.items():
        scores = _score_system(day_texts, gold, sif_params, pc)
        per_system_scores[name] = scores
        micro, macro = ev.aggregate(scores)
        report["systems"][name] = {"micro": micro, "macro": macro}

    names = sorted(systems)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            block = {}
            for metric, getter in (
                ("rouge1_f", lambda d: d.rouge1[2]),
                ("rouge2_f", lambda d: d.rouge2[2]),
                ("cos", lambda d: d.cos),
            ):
                xa = [getter(d) for d in per_system_scores[a]]
                xb = [getter(d) for d in per_system_scores[b]]
                try:
                    w, p = ev.wilcoxon_signed_rank(xa, xb)
                    block[metric] = {"W": w, "p": p}
                except ValueError as exc:
                    block[metric] = {"error": str(exc)}
            report["significance"][f"{a} vs {b}"] = block

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)

    header = f"{'system':<20}{'R1-F micro':>12}{'R1-F macro':>12}{'R2-F micro':>12}{'R2-F macro':>12}{'COS micro':>12}{'COS macro':>12}"
    print(header)
    for name in names:
        r = report["systems"][name]
        print(
            f"{name:<20}"
            f"{r['micro']['rouge1']['f']:>12.3f}{r['macro']['rouge1']['f']:>12.3f}"
            f"{r['micro']['rouge2']['f']:>12.3f}{r['macro']['rouge2']['f']:>12.3f}"
            f"{r['micro']['cos']:>12.3f}{r['macro']['cos']:>12.3f}"
        )
    return EXIT_OK


def cmd_baseline(args):
    tweets = read_stream(args.stream)
    gold = read_gold(args.gold)
    pools = {}
    budgets = {}
    for event_id, ts in _group_events(tweets).items():
        for inc, batch in partition_increments(ts):
            gold_text = gold.get(event_id, inc.day_index)
            if gold_text is None:
                continue
            key = (event_id, inc.day_index)
            pools[key] = batch
            budgets[key] = args.word_budget or len(gold_text.split())
    sif_params = _sif_params(args, [t.text for t in tweets] + list(gold.entries.values()))
    micro, macro, _ = ev.random_baseline(
        pools, budgets, gold, runs=args.runs, seed=args.seed, sif_params=sif_params
    )
    report = {"runs": args.runs, "seed": args.seed, "micro": micro, "macro": macro}
    out = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    print(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser():
    parser = _Parser(prog="tweetsumm", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--config", help="key = value config file; flags override")
        p.add_argument("--jobs", type=int, default=1, help="cross-event parallelism (default 1)")
        return p

    p = add("validate", cmd_validate, help="check input files and print statistics")
    p.add_argument("--stream")
    p.add_argument("--gold")
    p.add_argument("--vocab")
    p.add_argument("--embeddings")

    p = add("oracle", cmd_oracle, help="build greedy oracle summaries (both metrics)")
    p.add_argument("--stream")
    p.add_argument("--gold")
    p.add_argument("--out")
    p.add_argument("--word-budget", type=int, default=0, help="0 = gold length per day")
    p.add_argument("--word-vectors")
    p.add_argument("--word-probs")
    p.add_argument("--sif-dim", type=int, default=50)
    p.add_argument("--no-remove-pc", action="store_true")
    p.add_argument("--seed", type=int, default=0)

    p = add("targets", cmd_targets, help="materialize training examples (.npz)")
    p.add_argument("--stream")
    p.add_argument("--gold")
    p.add_argument("--vocab")
    p.add_argument("--embeddings")
    p.add_argument("--embed-dim", type=int, default=EMBED_DIM)
    p.add_argument("--oracle", help="oracle JSONL whose ids get target 1.0")
    p.add_argument("--out")
    p.add_argument("--word-vectors")
    p.add_argument("--word-probs")
    p.add_argument("--sif-dim", type=int, default=50)
    p.add_argument("--no-remove-pc", action="store_true")
    p.add_argument("--seed", type=int, default=0)

    p = add("train", cmd_train, help="train the salience net (optionally k-fold CV)")
    p.add_argument("--targets")
    p.add_argument("--out")
    p.add_argument("--log", default="train_log.json")
    p.add_argument("--folds", type=int, default=0, help="0 = single 90/10 training run")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--hidden", type=int, default=50)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--warmup", type=int, default=4000)
    p.add_argument("--lr-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)

    p = add("summarize", cmd_summarize, help="run incremental selection over events")
    p.add_argument("--stream")
    p.add_argument("--vocab")
    p.add_argument("--checkpoint")
    p.add_argument("--embeddings")
    p.add_argument("--gold", help="needed for --cap words:gold")
    p.add_argument("--out")
    p.add_argument("--lambda-salience", type=float, default=0.2)
    p.add_argument("--lambda-similarity", type=float, default=0.3)
    p.add_argument("--cap", default="tweets:20", help="tweets:N or words:gold|N")
    p.add_argument("--seed", type=int, default=0)

    p = add("evaluate", cmd_evaluate, help="score summary files against gold")
    p.add_argument("--summary", action="append", metavar="NAME=PATH")
    p.add_argument("--gold")
    p.add_argument("--out")
    p.add_argument("--word-vectors")
    p.add_argument("--word-probs")
    p.add_argument("--sif-dim", type=int, default=50)
    p.add_argument("--no-remove-pc", action="store_true")
    p.add_argument("--seed", type=int, default=0)

    p = add("baseline", cmd_baseline, help="average of 50 random summaries")
    p.add_argument("--stream")
    p.add_argument("--gold")
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--word-budget", type=int, default=0, help="0 = gold length per day")
    p.add_argument("--out")
    p.add_argument("--word-vectors")
    p.add_argument("--word-probs")
    p.add_argument("--sif-dim", type=int, default=50)
    p.add_argument("--no-remove-pc", action="store_true")

    return parser


_REQUIRED = {
    "validate": ("stream",),
    "oracle": ("stream", "gold", "out"),
    "targets": ("stream", "gold", "vocab", "out"),
    "train": ("targets", "out"),
    "summarize": ("stream", "vocab", "checkpoint", "out"),
    "evaluate": ("summary", "gold"),
    "baseline": ("stream", "gold"),
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        sub_action = next(
            a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
        )
        args = _apply_config(sub_action.choices[args.command], argv, args)
        for dest in _REQUIRED[args.command]:
            if not getattr(args, dest, None):
                raise UsageError(f"{args.command}: missing required flag --{dest.replace('_', '-')}")
        return args.func(args)
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return EXIT_USAGE
    except (DataError, VocabError, EmbeddingError, OSError, KeyError) as exc:
        _emit_error("data", str(exc))
        return EXIT_DATA
    except sal.NumericError as exc:
        _emit_error("numeric", str(exc))
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
