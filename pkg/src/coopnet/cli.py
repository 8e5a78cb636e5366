"""Command-line front end.

Exit status: 0 on success, 1 on validation or configuration failure, 2 on an
internal error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .bargain import PayoffTriple, nbs_allocate
from .config import load_config, parse_weights
from .errors import ConfigError, CoopNetError, NoAgreement, ParseError
from .netfile import format_network, read_network
from .network import build_sioux_falls
from .report import results_csv, roc_csv, write_outputs
from .scenario import (ScenarioConfig, heterogeneous_suite, highest_return, most_efficient,
                       run_scenario, sweep)

EXIT_OK, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None
    return a, b


def _config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.mu is not None:
        if args.mu <= 0:
            raise ConfigError("--mu must be positive")
        changes["mu"] = args.mu
    if args.weights is not None:
        changes["weights"] = parse_weights(args.weights)
    return cfg.with_(**changes) if changes else cfg


def _describe(label: str, r) -> str:
    if r is None:
        return f"{label}: none (no accepted point)"
    betas = " ".join(f"{b[0]:g}/{b[1]:g}" for b in r.betas)
    roc = "undefined" if r.roc is None else f"{r.roc:.6g}"
    return f"{label}: betas {betas}  dF_co {r.delta_f_co:.6g} CHF/day  CIR {r.cir:.6g}  ROC {roc}"


def cmd_validate(args) -> int:
    try:
        graph = read_network(args.network)
    except OSError as exc:
        print(f"error: cannot read {args.network}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    problems = graph.validate()
    if problems:
        for p in problems:
            print(f"violation: {p}")
        return EXIT_INVALID
    print(f"OK: {len(graph.node_ids)} nodes, {len(graph.alt_edges)} alternative edges, "
          f"{len(graph.rail_edges)} rail candidates")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    record = run_scenario(cfg)
    write_outputs(args.out, [record], svg=not args.no_svg)
    for y in record.years:
        state = "accepted" if y.accepted else "declined"
        print(f"year {y.year}: betas {y.betas[0]:g}/{y.betas[1]:g}  F2 {y.surplus:.6g}  {state}"
              + ("" if y.converged else "  (stage 1 did not converge)"))
    print(_describe("run", record))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    records = sweep(cfg, jobs=args.jobs)
    write_outputs(args.out, records, svg=not args.no_svg)
    accepted = sum(r.accepted_any for r in records)
    print(f"{len(records)} points, {accepted} with cooperation accepted")
    print(_describe("highest return", highest_return(records)))
    print(_describe("most investment-efficient", most_efficient(records)))
    return EXIT_OK


def cmd_hetero(args) -> int:
    cfg = _config(args)
    rows = heterogeneous_suite(cfg, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summaries = [s for _, _, s in rows]
    (out / "hetero.csv").write_text(roc_csv(summaries))
    (out / "results.csv").write_text(results_csv([r for _, recs, _ in rows for r in recs]))
    for s in summaries:
        print(f"{s.name:28s} ROC min {s.minimum:.4g}  q1 {s.q1:.4g}  median {s.median:.4g}  "
              f"q3 {s.q3:.4g}  max {s.maximum:.4g}  (n={s.n})")
    return EXIT_OK


def cmd_nbs(args) -> int:
    try:
        triple = PayoffTriple(args.no_mech, args.stage1, args.pool)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        alloc = nbs_allocate(triple)
    except NoAgreement:
        print("no agreement (cooperation adds no total gain): authorities keep their non-cooperative payoffs")
        return EXIT_OK
    q, v = alloc.shares, alloc.payoffs
    print(f"q = ({q[0]:.6g}, {q[1]:.6g})")
    print(f"v = ({v[0]:.6g}, {v[1]:.6g})")
    return EXIT_OK


def cmd_ue_check(args) -> int:
    from .toys import pigou_closed_form, pigou_toy, ue_toys
    from .ue import solve_ue

    ok = True
    for toy in ue_toys():
        res = solve_ue(toy.graph, toy.state, toy.requests, toy.hop_bound, toy.params)
        good = res.gap < args.tol
        ok &= good
        print(f"{toy.name:18s} gap {res.gap:.3e}  {'ok' if good else 'FAIL'}")
    toy = pigou_toy()
    res = solve_ue(toy.graph, toy.state, toy.requests, toy.hop_bound, toy.params)
    y = res.edge_flows[("alt", 2)]
    exact = pigou_closed_form(toy.params)
    rel = abs(y - exact) / exact
    ok &= rel < 1e-4
    print(f"pigou congestible-link flow {y:.6f} vs closed form {exact:.6f} (rel. error {rel:.2e})")
    return EXIT_OK if ok else EXIT_INVALID


def cmd_export(args) -> int:
    text = format_network(build_sioux_falls())
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coopnet", description="Two-region rail co-investment game on a multimodal network.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check a network file")
    v.add_argument("network")
    v.set_defaults(func=cmd_validate)

    for name, func, help_ in (("run", cmd_run, "run one beta schedule"),
                              ("sweep", cmd_sweep, "run every schedule of the beta grid"),
                              ("hetero", cmd_hetero, "heterogeneous-region suite")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="scenario config file (defaults built in)")
        s.add_argument("--out", default="out", help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--mu", type=float, help="logit scale (1/CHF)")
        s.add_argument("--weights", help="objective weights w0,w1,w2")
        if name != "run":
            s.add_argument("--jobs", type=int, default=1, help="worker processes")
        if name != "hetero":
            s.add_argument("--no-svg", action="store_true", help="skip the scatter plot")
        s.set_defaults(func=func)

    n = sub.add_parser("nbs", help="Nash-bargaining split of a co-investment surplus")
    n.add_argument("--no-mech", type=_pair, required=True, help="F_1,F_2 without the mechanism")
    n.add_argument("--stage1", type=_pair, required=True, help="Stage-1 payoffs F1_1,F1_2")
    n.add_argument("--pool", type=float, required=True, help="co-investment surplus")
    n.set_defaults(func=cmd_nbs)

    u = sub.add_parser("ue-check", help="user-equilibrium oracle on the bundled toys")
    u.add_argument("--tol", type=float, default=1e-3)
    u.set_defaults(func=cmd_ue_check)

    e = sub.add_parser("export-sioux-falls", help="write the bundled network file")
    e.add_argument("--out", default="-", help="destination path, '-' for stdout")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CoopNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
