"""Command-line interface.

Every command exits nonzero on error and writes a one-line JSON diagnostic
to standard error. ``oracle`` exits 0 for valid/feasible and 1 otherwise.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .alphabet import Dataset, detokenize, load_dataset, save_dataset, strip_pad, tokenize
from .config import ExperimentConfig, load_config
from .datagen import (AcquisitionConfig, AugmentationConfig, build_augmented_dataset,
                      label_sequences, sample_uniform)
from .errors import SeqValidError
from .experiments import learning_curve
from .io import (load_checkpoint, load_rows, save_checkpoint, save_eval_report, write_training_log)
from .model import ModelConfig
from .oracles import BruteForceOracle, SmilesPrefixOracle, eval_expression, validate_smiles
from .pipeline import bundled_path, corpus_sequences, make_task, read_corpus, run_experiment
from .sampling import (DEFAULT_TAUS, ModelPolicy, OraclePolicy, SmilesPolicy, boltzmann_sample,
                       estimate_coverage, mask_decode, model_accuracy, validity_entropy_curve)
from .training import TrainSettings, train

EXIT_ERROR = 2


def _err(kind: str, message: str, **extra) -> None:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)


def _task(args):
    return make_task(args.oracle, args.T, getattr(args, "alphabet", "") or "", getattr(args, "tokens", "") or "")


def _task_for_model(args, model, alphabet):
    """Task matching a checkpoint; the stored alphabet wins over flags."""
    task = make_task(args.oracle, model.config.seq_len, getattr(args, "alphabet", "") or "",
                     getattr(args, "tokens", "") or "")
    if alphabet is not None and alphabet.tokens != task.alphabet.tokens:
        from .pipeline import Task, make_validator
        task = Task(alphabet, model.config.seq_len, make_validator(args.oracle, alphabet))
    if task.alphabet.size != model.config.vocab_size:
        raise SeqValidError(f"checkpoint expects {model.config.vocab_size} tokens, "
                            f"alphabet has {task.alphabet.size}")
    return task


def _add_task_flags(p, T=True):
    p.add_argument("--oracle", choices=("expr", "smiles"), required=True)
    p.add_argument("--alphabet", default="", help="alphabet file (default: built-in for the oracle)")
    p.add_argument("--tokens", default="", help="space-separated alphabet subset")
    if T:
        p.add_argument("--T", type=int, required=True)


def _add_model_flags(p):
    p.add_argument("--embedding-dim", type=int, default=32)
    p.add_argument("--hidden-dim", type=int, default=128)
    p.add_argument("--input-dropout", type=float, default=0.2)
    p.add_argument("--hidden-dropout", type=float, default=0.2)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--grad-clip", type=float, default=5.0)


def _model_config(args, task):
    return ModelConfig(task.alphabet.size, task.T, args.embedding_dim, args.hidden_dim, 1,
                       args.input_dropout, args.hidden_dropout)


def _settings(args, steps):
    return TrainSettings(learning_rate=args.lr, batch_size=args.batch_size, steps=steps,
                         grad_clip=args.grad_clip)


# --- commands -----------------------------------------------------------------

def cmd_oracle(args) -> int:
    if args.prefix is None and args.check is None:
        raise SeqValidError("one of --check or --prefix is required")
    if args.check is not None:
        verdict = eval_expression(args.check) if args.oracle == "expr" else validate_smiles(args.check)
        print("valid" if verdict.valid else "invalid")
        if verdict.reason:
            print(verdict.reason, file=sys.stderr)
        return 0 if verdict.valid else 1
    if args.remaining is None:
        raise SeqValidError("--prefix needs --remaining")
    alphabet = make_task(args.oracle, 1, args.alphabet, args.tokens).alphabet
    prefix = tokenize(args.prefix, alphabet)
    T = len(prefix) + args.remaining
    if args.oracle == "smiles":
        ok = SmilesPrefixOracle(alphabet, T)(prefix)
    else:
        task = make_task(args.oracle, T, args.alphabet, args.tokens)
        ok = BruteForceOracle(task.alphabet, T, task.validator)(prefix)
    print("feasible" if ok else "infeasible")
    if not ok:
        print(f"no completion of {args.prefix!r} within {args.remaining} tokens", file=sys.stderr)
    return 0 if ok else 1


def cmd_gen_data(args) -> int:
    task = _task(args)
    if args.mode == "passive":
        X = sample_uniform(task.alphabet, task.T, args.n, args.seed)
        dataset = label_sequences(X, task.validator, task.alphabet)
    else:
        corpus = args.corpus or bundled_path("smiles_corpus.txt")
        dataset, stats = build_augmented_dataset(
            corpus_sequences(read_corpus(corpus), task.alphabet), task.validator, task.alphabet, task.T,
            AugmentationConfig(args.gamma), args.seed, args.copies)
        print(json.dumps(stats.__dict__), file=sys.stderr)
    save_dataset(dataset, args.out)
    print(f"{len(dataset)} sequences, valid fraction {dataset.valid_fraction():.4f}")
    return 0


def cmd_train(args) -> int:
    task = _task(args)
    dataset = load_dataset(args.data, task.alphabet, task.T)
    model, log = train(dataset, _model_config(args, task), _settings(args, args.steps), args.seed)
    save_checkpoint(model, args.out, task.alphabet)
    if args.log:
        write_training_log(log, args.log)
    print(f"final loss {log[-1].loss:.6f}" if log else "no steps taken")
    return 0


def cmd_active_train(args) -> int:
    task = _task(args)
    curve = learning_curve("active", task.alphabet, task.validator, _model_config(args, task),
                           _settings(args, 0), AcquisitionConfig(args.K, args.theta, args.L), args.rounds,
                           args.steps_per_round, args.eval_every, DEFAULT_TAUS, args.eval_n, args.seed,
                           log=lambda s: print(s, file=sys.stderr))
    save_checkpoint(curve.model, args.out, task.alphabet)
    if args.data_out:
        save_dataset(curve.dataset, args.data_out)
    for c in curve.checkpoints:
        print(f"{c.labels},{c.auc!r}")
    return 0


def cmd_sample(args) -> int:
    model, alphabet = load_checkpoint(args.ckpt)
    if alphabet is None:
        raise SeqValidError("checkpoint carries no alphabet")
    X, logp = boltzmann_sample(model, args.tau, args.n, args.seed)
    for row in X:
        print(detokenize(strip_pad(row, alphabet), alphabet))
    return 0


def cmd_eval_curve(args) -> int:
    model, alphabet = load_checkpoint(args.ckpt)
    task = _task_for_model(args, model, alphabet)
    taus = [float(t) for t in args.taus.split(",")] if args.taus else list(DEFAULT_TAUS)
    report = validity_entropy_curve(model, task.validator, taus, args.n, args.seed)
    if args.out:
        save_eval_report(report, args.out)
    for p in report.points:
        print(f"{p.tau},{p.validity},{p.entropy},{p.n}")
    print(f"auc {report.auc!r}")
    return 0


def cmd_coverage(args) -> int:
    model, alphabet = load_checkpoint(args.ckpt)
    task = _task_for_model(args, model, alphabet)
    cov = estimate_coverage(model, task.validator, args.tau, args.n, task.alphabet, task.T, args.seed)
    print(f"f_plus {cov.f_plus!r} +- {cov.f_plus_se!r}")
    print(f"N_plus {cov.N_plus:.6g}")
    print(f"H {cov.entropy!r}")
    print(f"N_model {cov.N_model:.6g}")
    print(f"validity {cov.validity!r}")
    return 0


def cmd_accuracy(args) -> int:
    model, alphabet = load_checkpoint(args.ckpt)
    task = _task_for_model(args, model, alphabet)
    dataset = load_dataset(args.data, task.alphabet, task.T)
    print(f"accuracy {model_accuracy(model, dataset)!r}")
    return 0


def cmd_mask_decode(args) -> int:
    rows = load_rows(args.rows)
    if args.masker == "oracle":
        task = make_task(args.oracle, len(rows), args.alphabet, args.tokens)
        if args.oracle == "smiles":
            masker = SmilesPolicy(SmilesPrefixOracle(task.alphabet, len(rows)))
        else:
            masker = OraclePolicy(BruteForceOracle(task.alphabet, len(rows), task.validator), task.alphabet)
        alphabet = task.alphabet
    else:
        model, alphabet = load_checkpoint(args.ckpt)
        if alphabet is None:
            raise SeqValidError("checkpoint carries no alphabet")
        masker = ModelPolicy(model)
    if rows.shape[1] != alphabet.size:
        raise SeqValidError(f"rows have {rows.shape[1]} columns, alphabet has {alphabet.size} tokens")
    rng = np.random.default_rng(args.seed)
    fallbacks = 0
    for _ in range(args.n):
        res = mask_decode(rows, masker, rng=rng)
        fallbacks += len(res.fallbacks)
        print(detokenize(strip_pad(res.sequence, alphabet), alphabet))
    print(json.dumps({"fallback_steps": fallbacks}), file=sys.stderr)
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise SeqValidError(f"--set expects section.key=value, got {item!r}")
        cfg = cfg.set(key.strip(), value)
    if args.output_dir:
        cfg = cfg.set("experiment.output_dir", args.output_dir)
    manifest = run_experiment(cfg.validate(), log=lambda s: print(s, file=sys.stderr))
    print(json.dumps({"complete": manifest["complete"], "digest": manifest["digest"],
                      "output_dir": cfg.experiment.output_dir}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seqvalid", description=__doc__.splitlines()[0])
    ap.add_argument("--threads", type=int, default=1,
                    help="BLAS thread cap; results are reproducible only at 1")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="judge a string or a prefix")
    _add_task_flags(p, T=False)
    p.add_argument("--check", help="complete string to validate")
    p.add_argument("--prefix", help="prefix to test for feasibility")
    p.add_argument("--remaining", type=int, help="tokens available after the prefix")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen-data", help="build a labeled dataset")
    _add_task_flags(p)
    p.add_argument("--mode", choices=("passive", "perturb"), default="passive")
    p.add_argument("--corpus", default="", help="valid corpus, one string per line (default: bundled SMILES)")
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--copies", type=int, default=1, help="perturbed copies per corpus entry")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a model on a dataset file")
    _add_task_flags(p)
    _add_model_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="training log CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("active-train", help="train with mutual-information acquisition")
    _add_task_flags(p)
    _add_model_flags(p)
    p.add_argument("--K", type=int, default=16)
    p.add_argument("--theta", type=float, default=0.05)
    p.add_argument("--L", type=int, default=64)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--steps-per-round", type=int, default=100)
    p.add_argument("--eval-every", type=int, default=1)
    p.add_argument("--eval-n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--data-out", help="write the acquired labeled dataset here")
    p.set_defaults(func=cmd_active_train)

    p = sub.add_parser("sample", help="Boltzmann samples from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval-curve", help="validity-entropy curve and its AUC")
    p.add_argument("--ckpt", required=True)
    _add_task_flags(p, T=False)
    p.add_argument("--taus", default="", help="comma-separated ascending temperatures")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report CSV")
    p.set_defaults(func=cmd_eval_curve)

    p = sub.add_parser("coverage", help="coverage estimate at one temperature")
    p.add_argument("--ckpt", required=True)
    _add_task_flags(p, T=False)
    p.add_argument("--tau", type=float, default=0.005)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("accuracy", help="sequence-level accuracy on a labeled dataset")
    p.add_argument("--ckpt", required=True)
    _add_task_flags(p, T=False)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_accuracy)

    p = sub.add_parser("mask-decode", help="decode weight rows under a validity mask")
    p.add_argument("--masker", choices=("ckpt", "oracle"), required=True)
    p.add_argument("--ckpt", help="checkpoint when --masker ckpt")
    p.add_argument("--oracle", choices=("expr", "smiles"), default="smiles")
    p.add_argument("--alphabet", default="")
    p.add_argument("--tokens", default="")
    p.add_argument("--rows", required=True, help="CSV, one row of weights per step")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mask_decode)

    p = sub.add_parser("run", help="config-driven pipeline")
    p.add_argument("--config", help="INI config file (defaults used when omitted)")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config key")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        from threadpoolctl import threadpool_limits
        with threadpool_limits(args.threads):
            return args.func(args)
    except SeqValidError as exc:
        extra = {"stage": exc.stage} if hasattr(exc, "stage") else {}
        _err(type(exc).__name__, str(exc), **extra)
    except (OSError, ValueError) as exc:
        _err(type(exc).__name__, str(exc))
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
