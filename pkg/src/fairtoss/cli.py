"""Command-line interface.

Subcommands: toss (one protocol run), simulate (Monte Carlo experiment from
a config file), compare (several mechanisms on one scenario), serve (HTTP
session service), replay (re-execute a recorded transcript and verify it).

Exit codes: 0 success, 1 domain error (bad config, protocol violation,
replay mismatch), 2 usage error.  Set FAIRTOSS_LOG=debug|info|warning to
control log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys

from .baselines import MechanismKind
from .engine import execute_tpc
from .errors import FairTossError
from .harness import ScenarioConfig, compare_mechanisms, run_experiment, write_report
from .mechanism import Turn, canonical_json, check_envy_free, replay_transcript
from .strategies import build_chooser, build_proposer
from .streams import substream
from .valuation import MatchConditions, ModelKind, ValuationModel

__all__ = ["main", "entrypoint", "build_parser"]

log = logging.getLogger("fairtoss")

_TURNS = [t.value for t in Turn]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairtoss",
        description="Toss-Propose-Choose fair-toss protocol runs, experiments, and service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    toss = sub.add_parser("toss", help="run one full TOSS -> PROPOSE -> CHOOSE protocol")
    toss.add_argument("--team-a", default="AUS", help="first-listed team (wins the toss on coin=0)")
    toss.add_argument("--team-b", default="NZL")
    toss.add_argument("--a", type=float, default=50.0,
                      help="true advantage in runs; positive favors batting first")
    toss.add_argument("--noise-sd", type=float, default=0.0, help="per-team estimation noise sd")
    toss.add_argument("--model", choices=[k.value for k in ModelKind], default="logistic")
    toss.add_argument("--sigma", type=float, default=None, help="model scale in runs")
    toss.add_argument("--proposer", choices=["truthful", "strategic"], default="truthful")
    toss.add_argument("--belief-turn", choices=_TURNS, default=None,
                      help="strategic proposer: believed chooser bias turn")
    toss.add_argument("--belief-s", type=float, default=0.0,
                      help="strategic proposer: believed stubbornness in runs")
    toss.add_argument("--confidence", type=float, default=1.0)
    toss.add_argument("--grid-step", type=float, default=1.0)
    toss.add_argument("--chooser", choices=["rational", "habitual"], default="rational")
    toss.add_argument("--habitual-turn", choices=_TURNS, default=None)
    toss.add_argument("--stubbornness", type=float, default=0.0)
    toss.add_argument("--seed", type=int, default=None, help="coin/view seed; entropy when omitted")
    toss.add_argument("--json", action="store_true", help="print the canonical JSON transcript")

    simulate = sub.add_parser("simulate", help="run a Monte Carlo experiment from a config file")
    simulate.add_argument("--config", required=True, help="scenario config JSON path")
    simulate.add_argument("--out", default=None, help="write the report here instead of stdout")
    simulate.add_argument("--format", choices=["json", "csv"], default="json")
    simulate.add_argument("--replications", type=int, default=None, help="override config replications")
    simulate.add_argument("--seed", type=int, default=None, help="override config seed")

    compare = sub.add_parser("compare", help="compare mechanisms on one scenario (common random numbers)")
    compare.add_argument("--config", required=True, help="base scenario config JSON path")
    compare.add_argument("--mechanisms", nargs="+", required=True,
                         choices=[k.value for k in MechanismKind])
    compare.add_argument("--out", default=None)
    compare.add_argument("--format", choices=["json", "csv"], default="json")
    compare.add_argument("--replications", type=int, default=None)
    compare.add_argument("--seed", type=int, default=None)

    serve = sub.add_parser("serve", help="start the HTTP session service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--store", default="fairtoss-sessions.db", help="session store path")

    replay = sub.add_parser("replay", help="re-execute a transcript and verify it is unaltered")
    replay.add_argument("transcript", help="transcript JSON path")
    replay.add_argument("--json", action="store_true")

    return parser


def _print_transcript(transcript: dict, envy=None) -> None:
    toss = transcript["toss"]
    proposal = transcript["proposal"]
    allocation = transcript["allocation"]
    turn_words = {"bat_first": "bat first", "bowl_first": "bowl first"}
    print(f"TOSS     {toss['lucky']} win the toss "
          f"(coin={toss['coin_draw']}, {toss['seed_trace']}); {toss['unlucky']} propose")
    adv = turn_words[proposal["advantageous_turn"]]
    other = turn_words["bowl_first" if proposal["advantageous_turn"] == "bat_first" else "bat_first"]
    b = proposal["b"]
    print(f"PROPOSE  {toss['unlucky']}: option 1 = {adv} and concede {b:g} runs, "
          f"option 2 = {other} and receive {b:g} runs (b={b:g}, solved {proposal['b_raw']:.6f})")
    chosen_turn = turn_words[allocation["chosen"]["turn"]]
    option = transcript["events"][-1]["option"]
    print(f"CHOOSE   {allocation['chooser']} take option {option}: {chosen_turn}")
    if allocation["bonus_recipient"] is not None:
        print(f"RESULT   {allocation['bonus_recipient']} receive {allocation['bonus_runs']:g} bonus runs; "
              f"{allocation['chooser']} {chosen_turn}")
    else:
        print(f"RESULT   no bonus runs; {allocation['chooser']} {chosen_turn}")
    if envy is not None:
        verdict = "envy detected" if envy.any_envy else "no envy"
        print(f"ENVY     proposer gap {envy.proposer_gap:+.6f}, "
              f"chooser gap {envy.chooser_gap:+.6f} ({verdict})")


def _cmd_toss(args: argparse.Namespace) -> int:
    sigma_default = {"logistic": 30.0, "score_sim": 30.0, "linear": None}[args.model]
    model = ValuationModel(ModelKind(args.model),
                           args.sigma if args.sigma is not None else sigma_default)
    conditions = MatchConditions(true_advantage=args.a, advantage_noise_sd=args.noise_sd)
    proposer_desc: dict = {"kind": args.proposer}
    if args.proposer == "strategic":
        belief_turn = args.belief_turn or "bat_first"
        proposer_desc["belief"] = {"turn": belief_turn, "s": args.belief_s,
                                   "confidence": args.confidence}
        proposer_desc["grid_step"] = args.grid_step
    chooser_desc: dict = {"kind": args.chooser}
    if args.chooser == "habitual":
        chooser_desc["turn"] = args.habitual_turn or "bat_first"
        chooser_desc["s"] = args.stubbornness

    seed = args.seed if args.seed is not None else secrets.randbits(63)
    trace = f"seed:{args.seed}" if args.seed is not None else f"entropy:{seed}"
    outcome = execute_tpc(
        args.team_a, args.team_b,
        build_proposer(proposer_desc), build_chooser(chooser_desc),
        conditions, substream(seed, "toss"), model, seed_trace=trace,
    )
    if args.json:
        print(canonical_json(outcome.transcript()))
    else:
        envy = check_envy_free(outcome.allocation, outcome.proposer_view, outcome.chooser_view)
        _print_transcript(outcome.transcript(), envy)
    return 0


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    config = ScenarioConfig.from_file(args.config)
    overrides = {}
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.seed is not None:
        overrides["seed"] = args.seed
    return config.with_overrides(**overrides) if overrides else config


def _emit(report, args: argparse.Namespace) -> None:
    if args.out:
        write_report(report, args.out, args.format)
        log.info("wrote %s report to %s", args.format, args.out)
    else:
        print(json.dumps(report.to_dict(), sort_keys=True, indent=2))


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    _emit(run_experiment(config), args)
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    base = _load_config(args)
    configs = [base.with_overrides(mechanism=MechanismKind(name)) for name in args.mechanisms]
    _emit(compare_mechanisms(configs), args)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(args.store), host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    with open(args.transcript, "r", encoding="utf-8") as handle:
        recorded = json.load(handle)
    replayed = replay_transcript(recorded)
    if canonical_json(replayed) != canonical_json(recorded):
        print("replay mismatch: transcript does not reproduce from its own events", file=sys.stderr)
        return 1
    if args.json:
        print(canonical_json(replayed))
    else:
        _print_transcript(replayed)
    return 0


_COMMANDS = {
    "toss": _cmd_toss,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "serve": _cmd_serve,
    "replay": _cmd_replay,
}


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("FAIRTOSS_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FairTossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
