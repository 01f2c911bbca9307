from argparse import ArgumentParser
from time import time

from ser import (parse_list, run_ablate, run_align, run_eval, run_gen_data, run_strip,
                 run_train, setup_logging)

ASCII_ART = """
,-.-.,---.     ,---.,---.,---.
| | ||__.  ___ |---||__. |
| | ||         |   ||    |
` ' '`         `   '`---'`---'
"""

if __name__ == "__main__":
    argprs = ArgumentParser()
    argprs.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="enable more verbose logging")

    argprs.add_argument(
        "--timing",
        action="store_true",
        help="write wall-clock seconds into metrics files (makes them run-dependent)")

    commands = argprs.add_subparsers(dest="command", required=True)

    # GEN-DATA #

    cmd = commands.add_parser("gen-data", help="generate a synthetic corpus")
    cmd.add_argument("--spec", required=True, metavar="FILE",
                     help="corpus spec (key = value file)")
    cmd.add_argument("--n", required=True, type=int, help="number of utterances")
    cmd.add_argument("--corrupt", default=None, metavar="FILE",
                     help="corruption spec; without it hypotheses equal transcripts")
    cmd.add_argument("--out", required=True, metavar="PATH", help="where to write the corpus")
    cmd.add_argument("--seed", type=int, default=None,
                     help="sampling and corruption seed (defaults to the spec files' seeds)")
    cmd.add_argument("--workers", type=int, default=1, help="generator threads")

    # ALIGN #

    cmd = commands.add_parser("align", help="label hypotheses against references")
    cmd.add_argument("--hyp", required=True, metavar="FILE",
                     help="hypotheses, one 'id<TAB>tokens' per line")
    cmd.add_argument("--ref", required=True, metavar="FILE",
                     help="references, one 'id<TAB>tokens' per line")
    cmd.add_argument("--out", default=None, metavar="FILE",
                     help="where to write the labelings (default: standard output)")

    # TRAIN #

    cmd = commands.add_parser("train", help="train a model")
    cmd.add_argument("--config", required=True, metavar="FILE",
                     help="train config (key = value file)")
    cmd.add_argument("--data", default=None, metavar="PATH",
                     help="training corpus (overrides the config)")
    cmd.add_argument("--eval-data", default=None, metavar="PATH",
                     help="corpus evaluated after every eval interval (overrides the config)")
    cmd.add_argument("--out", required=True, metavar="CKPT", help="where to save the checkpoint")
    cmd.add_argument("--metrics", default=None, metavar="CSV",
                     help="where to write per-epoch metrics")
    cmd.add_argument("--seed", type=int, default=None, help="overrides the config seed")

    # EVAL #

    cmd = commands.add_parser("eval", help="evaluate a checkpoint")
    cmd.add_argument("--ckpt", required=True, metavar="CKPT", help="checkpoint to evaluate")
    cmd.add_argument("--data", required=True, metavar="PATH", help="evaluation corpus")
    cmd.add_argument("--metrics", default=None, metavar="CSV", help="where to write the metrics")
    cmd.add_argument("--strip-aux", action="store_true",
                     help="drop the error detection and correction heads before evaluating")
    cmd.add_argument("--mode", default=None,
                     help="model variant to evaluate in (default: the checkpoint's)")
    cmd.add_argument("--text-source", default="asr", choices=["asr", "transcript"],
                     help="text fed to the model")
    cmd.add_argument("--workers", type=int, default=1, help="evaluation threads")

    # ABLATE #

    cmd = commands.add_parser("ablate", help="compare model variants over several seeds")
    cmd.add_argument("--config", required=True, metavar="FILE",
                     help="base train config (key = value file)")
    cmd.add_argument("--modes", default="full,no-aed,no-aec,no-mf",
                     help="comma-separated model variants")
    cmd.add_argument("--seeds", default="1,2,3,4,5", help="comma-separated seeds")
    cmd.add_argument("--data", default=None, metavar="PATH",
                     help="training corpus (overrides the config)")
    cmd.add_argument("--eval-data", default=None, metavar="PATH",
                     help="evaluation corpus (overrides the config)")
    cmd.add_argument("--out", required=True, metavar="CSV", help="where to write the table")

    # STRIP #

    cmd = commands.add_parser("strip", help="drop the auxiliary heads from a checkpoint")
    cmd.add_argument("--ckpt", required=True, metavar="CKPT", help="full checkpoint")
    cmd.add_argument("--out", required=True, metavar="CKPT", help="where to save the result")

    # Parse command line options and print an ascii_art text
    args = argprs.parse_args()

    # align without --out writes its results to stdout
    chatty = not (args.command == "align" and args.out is None)
    if chatty:
        print(ASCII_ART)

    # Prepare the logger
    setup_logging(args.verbose)

    st = time()

    if args.command == "gen-data":
        print("=== Generating a synthetic corpus ===")
        run_gen_data(args.spec, args.n, args.corrupt, args.out, args.seed, args.workers)

    elif args.command == "align":
        run_align(args.hyp, args.ref, args.out)

    elif args.command == "train":
        print("=== Training ===")
        run_train(args.config, args.data, args.out, args.eval_data, args.metrics, args.seed,
                  args.timing)

    elif args.command == "eval":
        print("=== Evaluating ===")
        run_eval(args.ckpt, args.data, args.metrics, args.strip_aux, args.mode, args.workers,
                 args.text_source, args.timing)

    elif args.command == "ablate":
        print("=== Running the ablation ===")
        run_ablate(args.config, parse_list(args.modes), parse_list(args.seeds, int), args.out,
                   args.data, args.eval_data, args.timing)

    elif args.command == "strip":
        run_strip(args.ckpt, args.out)

    if chatty:
        print(f"Time elapsed: {time() - st:.3f} s")
