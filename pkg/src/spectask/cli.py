"""Command-line interface.

Commands: gen-demos, learn-wfa, train-cost, evaluate, score-word.
Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from . import automaton, cost_model, evaluation, expert, gridworld, irl, spectral
from .core import compress, load_demos, save_demos
from .hankel import basis_from_words, build_hankel_from_words


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; remap to the documented 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser():
    p = _Parser(prog="spectask", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-demos", parents=[], help="generate demonstration sets")
    g.add_argument("--task", choices=["doorkey", "multiroom"], required=True)
    g.add_argument("--n-success", type=int, required=True)
    g.add_argument("--n-fail", type=int, required=True)
    g.add_argument("--eta", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    w = sub.add_parser("learn-wfa", help="spectral WFA learning")
    w.add_argument("--demos", required=True)
    w.add_argument("--rank", type=int)
    w.add_argument("--rows", type=int)
    w.add_argument("--cols", type=int)
    w.add_argument("--xi", type=float, default=0.5)
    w.add_argument("--sweep", help="e.g. rank=2..10,rows=2..8,cols=2..8")
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--out", required=True)

    t = sub.add_parser("train-cost", help="train the transition-cost model")
    t.add_argument("--demos", required=True)
    t.add_argument("--wfa", required=True)
    t.add_argument("--model", choices=["linear", "mlp"], default="linear")
    t.add_argument("--eta", type=float, default=0.5)
    t.add_argument("--lr", type=float, default=0.05)
    t.add_argument("--epochs", type=int, default=10)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.add_argument("--trace")

    e = sub.add_parser("evaluate", help="evaluate the learned agent")
    e.add_argument("--task", choices=["doorkey", "multiroom"], required=True)
    e.add_argument("--wfa", required=True)
    e.add_argument("--cost", required=True)
    e.add_argument("--n-envs", type=int, required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--horizon", type=int)
    e.add_argument("--eta", type=float, default=0.0)
    e.add_argument("--out", required=True)

    s = sub.add_parser("score-word", help="score a word with a learned WFA")
    s.add_argument("--wfa", required=True)
    s.add_argument("--word", required=True, help="comma-separated symbol bitmasks")
    return p


def _parse_sweep(text):
    ranges = {}
    for part in text.split(","):
        m = re.fullmatch(r"(rank|rows|cols)=(\d+)\.\.(\d+)", part.strip())
        if not m:
            raise UsageError(f"bad sweep segment {part!r}")
        lo, hi = int(m.group(2)), int(m.group(3))
        if lo > hi:
            raise UsageError(f"empty range in {part!r}")
        ranges[m.group(1)] = range(lo, hi + 1)
    for key in ("rank", "rows", "cols"):
        if key not in ranges:
            raise UsageError(f"sweep is missing {key}")
    return ranges


def _infer_task(demos):
    # demo files carry no task id; the starting grid contents identify it
    state = demos[0].states[0] if demos[0].states else demos[0].final_state
    if gridworld.KEY in state.grid or state.carried == gridworld.CARRY_KEY:
        return gridworld.TaskSpec.doorkey(height=state.h, width=state.w)
    doors = sum(
        1 for c in state.grid if c in (gridworld.DOOR_CLOSED, gridworld.DOOR_OPEN)
    )
    return gridworld.TaskSpec.multiroom(rooms=doors + 1, room_size=state.h - 2)


def _cmd_gen_demos(args):
    task = gridworld.task_by_name(args.task)
    demos = []
    if args.n_success > 0:
        demos.extend(expert.gen_success(task, args.n_success, args.eta, args.seed))
    if args.n_fail > 0:
        demos.extend(expert.gen_failure(task, args.n_fail, args.seed + 100_000))
    save_demos(args.out, demos)
    print(f"wrote {len(demos)} demonstrations to {args.out}")
    return 0


def _cmd_learn_wfa(args):
    if not args.sweep and (args.rank is None or args.rows is None or args.cols is None):
        raise UsageError("provide --rank/--rows/--cols or --sweep")
    demos = load_demos(args.demos)
    if not demos:
        raise UsageError("demo file is empty")
    words = [compress(d.word) for d in demos]
    ap_count = max((max(w).bit_length() for w in words if w), default=1)
    ap_count = max(ap_count, 1)
    if args.sweep:
        ranges = _parse_sweep(args.sweep)
        best, _ = evaluation.sweep(
            demos,
            ranges["rank"],
            ranges["rows"],
            ranges["cols"],
            xi=args.xi,
            ap_count=ap_count,
            seed=args.seed,
        )
        rank, rows, cols = best["rank"], best["rows"], best["cols"]
        print(
            f"sweep best: rank={rank} rows={rows} cols={cols} "
            f"held-out loss={best['loss']:.6g}"
        )
    else:
        rank, rows, cols = args.rank, args.rows, args.cols
    scored = [(w, float(d.score)) for w, d in zip(words, demos)]
    basis = basis_from_words(words, rows, cols)
    blocks = build_hankel_from_words(scored, basis)
    wfa = spectral.spectral_learn(
        blocks, spectral.SpectralConfig(rank), xi=args.xi, ap_count=ap_count
    )
    loss = spectral.word_fit_loss(wfa, scored)
    automaton.save_wfa(args.out, wfa)
    print(f"rank={rank} rows={rows} cols={cols} fit loss={loss:.6g} -> {args.out}")
    return 0


def _cmd_train_cost(args):
    demos = load_demos(args.demos)
    if not demos:
        raise UsageError("demo file is empty")
    wfa = automaton.load_wfa(args.wfa)
    task = _infer_task(demos)
    model = cost_model.init_cost_model(args.model, task, seed=args.seed)
    cfg = irl.TrainConfig(
        eta=args.eta, lr=args.lr, epochs=args.epochs, seed=args.seed
    )
    trace = irl.train(task, demos, wfa, model, cfg)
    cost_model.save_cost_model(args.out, model)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as f:
            f.write("epoch,mean_nll\n")
            for epoch, nll in trace:
                f.write(f"{epoch},{nll!r}\n")
    final = trace[-1][1] if trace else float("nan")
    print(f"trained {args.model} cost for {args.epochs} epochs; "
          f"final mean NLL={final:.6g} -> {args.out}")
    return 0


def _cmd_evaluate(args):
    task = gridworld.task_by_name(args.task)
    wfa = automaton.load_wfa(args.wfa)
    model = cost_model.load_cost_model(args.cost)
    report = evaluation.evaluate(
        task,
        wfa,
        model,
        n_envs=args.n_envs,
        seed=args.seed,
        horizon=args.horizon,
        eta=args.eta,
    )
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(report.to_obj(), f, indent=2)
        f.write("\n")
    mhd_text = "null" if report.mhd is None else f"{report.mhd:.4f}"
    print(
        f"TSR={report.tsr:.4f} MHD={mhd_text} mean return={report.mean_return:.4f} "
        f"(expert {report.expert_mean_return:.4f}) -> {args.out}"
    )
    return 0


def _cmd_score_word(args):
    wfa = automaton.load_wfa(args.wfa)
    text = args.word.strip()
    try:
        word = tuple(int(tok) for tok in text.split(",")) if text else ()
    except ValueError as e:
        raise UsageError(f"bad word {args.word!r}: {e}") from e
    h = automaton.score(wfa, word)
    verdict = "accept" if h >= wfa.xi else "reject"
    print(f"h={h!r} xi={wfa.xi!r} {verdict}")
    return 0


_COMMANDS = {
    "gen-demos": _cmd_gen_demos,
    "learn-wfa": _cmd_learn_wfa,
    "train-cost": _cmd_train_cost,
    "evaluate": _cmd_evaluate,
    "score-word": _cmd_score_word,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
