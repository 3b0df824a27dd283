"""Command-line interface.

Subcommands: synth, verify, atoms, check-region, brute, gen-hs, gen-1in3,
witnesses.  Every command builds one report (rendered as `key: value`
lines, or as a single JSON document with --json carrying the same fields)
and exits with:

    0   yes / success
    1   no / unsolvable (a decided negative)
    2   unknown (heuristic or selection budget ran out)
    3   input error
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ersynth.gadgets import (
    GadgetError,
    build_1in3_gadget,
    build_hs_gadget,
    hs_gadget_counts,
    one_in_three_gadget_counts,
    parse_1in3,
    parse_gadget,
    parse_hs,
    serialize_gadget,
    solve_1in3_brute,
    solve_hs_brute,
    validate_witnesses,
)
from ersynth.petri import (
    PetriError,
    StateCapExceeded,
    net_environment,
    parse_net,
    reachability_graph,
    serialize_net,
    verify,
)
from ersynth.regions import (
    Region,
    RegionError,
    atoms,
    brute_force_region,
    expand_region_spec,
    parse_atom,
    parse_region_specs,
    canonical_atom,
    region_violations,
    serialize_region,
)
from ersynth.synthesis import Bounds, synthesize
from ersynth.ts import TransitionSystem, TsError, isomorphic, parse_ts, serialize_ts

EXIT_YES = 0
EXIT_NO = 1
EXIT_UNKNOWN = 2
EXIT_INPUT = 3

InputError = (TsError, RegionError, PetriError, GadgetError, OSError, ValueError)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _bound(text: str) -> int | None:
    if text == "unbounded":
        return None
    value = int(text)
    if value < 0:
        raise ValueError("bounds must be nonnegative or `unbounded`")
    return value


def _bound_str(value: int | None) -> str:
    return "unbounded" if value is None else str(value)


def _region_line(ts: TransitionSystem, region: Region) -> str:
    cons = " ".join(f"{e}={region.con[e]}" for e in ts.events if region.con[e]) or "-"
    prod = " ".join(f"{e}={region.pro[e]}" for e in ts.events if region.pro[e]) or "-"
    pre, post = region.environment()
    return (
        f"init={region.sup[ts.initial]} cons {cons} prod {prod} "
        f"env ({pre},{post}) pure={'yes' if region.is_pure() else 'no'}"
    )


def _flatten(value, prefix: str = "") -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    if isinstance(value, dict):
        for k, v in value.items():
            out.extend(_flatten(v, f"{prefix}{k}."))
    elif isinstance(value, list):
        if all(not isinstance(v, (dict, list)) for v in value):
            out.append((prefix.rstrip("."), " ".join(str(v) for v in value) if value else "-"))
        else:
            for i, v in enumerate(value):
                out.extend(_flatten(v, f"{prefix.rstrip('.')}[{i}]."))
    else:
        out.append((prefix.rstrip("."), str(value)))
    return out


def _emit(report: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report, indent=2, sort_keys=False))
    else:
        for key, value in _flatten(report):
            print(f"{key}: {value}")


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args) -> tuple[int, dict]:
    ts = parse_ts(_read(args.ts))
    bounds = Bounds(rho=args.rho, kappa=args.kappa, pure=args.pure)
    dump = open(args.dump_systems, "w", encoding="utf-8") if args.dump_systems else None
    try:
        result = synthesize(
            ts,
            bounds,
            strategy=args.strategy,
            jobs=args.jobs,
            scan_all=args.scan_all,
            max_selections=args.max_selections,
            heuristic_budget=args.heuristic_budget,
            dump=dump,
        )
    finally:
        if dump:
            dump.close()
    report = {
        "command": "synth",
        "ts": args.ts,
        "bounds": {"rho": _bound_str(bounds.rho), "kappa": _bound_str(bounds.kappa), "pure": bounds.pure},
        "strategy": args.strategy,
        "outcome": result.outcome,
        "stats": {
            "atoms_total": result.stats.atoms_total,
            "atoms_reused": result.stats.atoms_reused,
            "atoms_lp_solved": result.stats.atoms_lp_solved,
            "systems_solved": result.stats.systems_solved,
            "wall_time_ms": round(result.stats.wall_time * 1000, 3),
        },
    }
    if result.outcome == "solved":
        report["regions"] = [_region_line(ts, r) for r in result.regions]
        _, maxima = net_environment(result.net)
        report["environment_maxima"] = list(maxima)
        if args.out:
            Path(args.out).write_text(serialize_net(result.net), encoding="utf-8")
            report["net_file"] = args.out
        if args.regions_out:
            text = "".join(
                serialize_region(ts, r, name=f"p{i}") for i, r in enumerate(result.regions)
            )
            Path(args.regions_out).write_text(text, encoding="utf-8")
            report["regions_file"] = args.regions_out
        if args.verify:
            phi = None if result.net is None else verify(ts, result.net)
            report["verified"] = "isomorphic" if phi is not None else "not isomorphic"
            if phi is not None:
                report["isomorphism"] = {s: phi[s] for s in ts.states}
            else:
                return EXIT_NO, report
        return EXIT_YES, report
    if result.outcome == "unsolvable":
        report["witness"] = str(result.witness)
        if args.scan_all:
            report["failed_atoms"] = [str(a) for a in result.failed_atoms]
        return EXIT_NO, report
    report["witness"] = str(result.witness)
    return EXIT_UNKNOWN, report


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args) -> tuple[int, dict]:
    ts = parse_ts(_read(args.ts))
    net = parse_net(_read(args.net))
    if set(net.transitions) != set(ts.events):
        raise PetriError(
            "event sets differ: ts has "
            + (" ".join(sorted(set(ts.events) - set(net.transitions))) or "-")
            + " extra, net has "
            + (" ".join(sorted(set(net.transitions) - set(ts.events))) or "-")
        )
    report = {"command": "verify", "ts": args.ts, "net": args.net}
    try:
        graph = reachability_graph(net, state_cap=len(ts.states) + 1)
    except StateCapExceeded:
        report["result"] = "not isomorphic"
        report["discrepancy"] = f"net reaches more than {len(ts.states)} markings"
        return EXIT_NO, report
    phi = isomorphic(ts, graph)
    if phi is None:
        report["result"] = "not isomorphic"
        report["discrepancy"] = _first_discrepancy(ts, graph)
        return EXIT_NO, report
    report["result"] = "isomorphic"
    report["isomorphism"] = {s: phi[s] for s in ts.states}
    return EXIT_YES, report


def _first_discrepancy(ts: TransitionSystem, graph: TransitionSystem) -> str:
    if len(ts.states) != len(graph.states):
        return f"state counts differ: {len(ts.states)} vs {len(graph.states)}"
    phi = {ts.initial: graph.initial}
    queue = [ts.initial]
    seen = {ts.initial}
    image = {graph.initial}
    while queue:
        s = queue.pop(0)
        t = phi[s]
        out_a = dict(ts.outgoing(s))
        out_b = dict(graph.outgoing(t))
        for e in out_a:
            if e not in out_b:
                return f"edge {s} -{e}-> {out_a[e]} has no counterpart at marking {t}"
        for e in out_b:
            if e not in out_a:
                return f"marking {t} fires extra event {e} (state {s} cannot)"
        for e, s2 in out_a.items():
            t2 = out_b[e]
            if s2 in phi and phi[s2] != t2:
                return f"edge targets conflict at {s} -{e}->: {phi[s2]} vs {t2}"
            if s2 not in phi:
                if t2 in image:
                    return f"two states map to marking {t2}"
                phi[s2] = t2
                image.add(t2)
                seen.add(s2)
                queue.append(s2)
    return "structures differ"


# ---------------------------------------------------------------------------
# atoms / check-region / brute
# ---------------------------------------------------------------------------


def cmd_atoms(args) -> tuple[int, dict]:
    ts = parse_ts(_read(args.ts))
    alist = atoms(ts)
    nssa = sum(1 for a in alist if a.kind == "ssa")
    report = {
        "command": "atoms",
        "ts": args.ts,
        "ssa_count": nssa,
        "essa_count": len(alist) - nssa,
        "total": len(alist),
        "atoms": [str(a) for a in alist],
    }
    return EXIT_YES, report


def cmd_check_region(args) -> tuple[int, dict]:
    ts = parse_ts(_read(args.ts))
    specs = parse_region_specs(_read(args.region))
    target = canonical_atom(ts, parse_atom(args.atom)) if args.atom else None
    entries = []
    all_ok = True
    for spec in specs:
        entry: dict = {"name": spec.name or "region"}
        try:
            region = expand_region_spec(ts, spec)
        except RegionError as exc:
            entry["valid"] = False
            entry["error"] = str(exc)
            entries.append(entry)
            all_ok = False
            continue
        problems = region_violations(ts, region)
        entry["valid"] = not problems
        if problems:
            entry["error"] = "; ".join(problems)
            all_ok = False
        pre, post = region.environment()
        entry["pure"] = region.is_pure()
        entry["environment"] = [pre, post]
        entry["support"] = {s: region.sup[s] for s in ts.states}
        solved = [str(a) for a in atoms(ts) if region.solves(a)]
        entry["solves"] = solved
        if target is not None:
            hit = region.solves(target)
            entry["solves_target"] = hit
            all_ok = all_ok and hit
        entries.append(entry)
    report = {"command": "check-region", "ts": args.ts, "region_file": args.region, "regions": entries}
    if target is not None:
        report["target_atom"] = str(target)
    return (EXIT_YES if all_ok else EXIT_NO), report


def cmd_brute(args) -> tuple[int, dict]:
    ts = parse_ts(_read(args.ts))
    atom = canonical_atom(ts, parse_atom(args.atom))
    region = brute_force_region(ts, atom, args.bound, rho=args.rho, kappa=args.kappa, pure=args.pure)
    report = {
        "command": "brute",
        "ts": args.ts,
        "atom": str(atom),
        "bound": args.bound,
        "rho": _bound_str(args.rho),
        "kappa": _bound_str(args.kappa),
        "pure": args.pure,
    }
    if region is None:
        report["result"] = "none"
        return EXIT_NO, report
    report["result"] = "found"
    report["region"] = _region_line(ts, region)
    return EXIT_YES, report


# ---------------------------------------------------------------------------
# gadget generation / witness validation
# ---------------------------------------------------------------------------


def cmd_gen_hs(args) -> tuple[int, dict]:
    inst = parse_hs(_read(args.instance))
    gadget = build_hs_gadget(inst)
    solution = solve_hs_brute(inst) if inst.num_vars <= 20 else None
    report = _gadget_report("gen-hs", args, gadget)
    report["instance"] = {
        "universe": inst.num_vars,
        "sets": len(inst.sets),
        "lambda": inst.budget,
        "hitting_set": [inst.var(i) for i in solution] if solution is not None else "none",
    }
    report["expected_counts"] = list(hs_gadget_counts(inst))
    return EXIT_YES, report


def cmd_gen_1in3(args) -> tuple[int, dict]:
    inst = parse_1in3(_read(args.instance))
    gadget = build_1in3_gadget(inst)
    model = solve_1in3_brute(inst)
    report = _gadget_report("gen-1in3", args, gadget)
    report["instance"] = {
        "variables": inst.num_vars,
        "clauses": len(inst.clauses),
        "model": [inst.var(i) for i in model] if model is not None else "none",
    }
    report["expected_counts"] = list(one_in_three_gadget_counts(inst))
    return EXIT_YES, report


def _gadget_report(command: str, args, gadget) -> dict:
    text = serialize_gadget(gadget)
    report = {
        "command": command,
        "instance_file": args.instance,
        "states": len(gadget.ts.states),
        "events": len(gadget.ts.events),
        "edges": gadget.ts.num_edges(),
        "rho": gadget.rho,
        "kappa": gadget.kappa,
        "pure": gadget.pure,
        "atom": str(gadget.atom),
        "witnesses": len(gadget.witnesses),
        "notes": list(gadget.notes),
    }
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        report["gadget_file"] = args.out
    else:
        sys.stdout.write(text)
    return report


def cmd_witnesses(args) -> tuple[int, dict]:
    gadget = parse_gadget(_read(args.gadget))
    reports = validate_witnesses(gadget)
    entries = []
    for r in reports:
        entry = {
            "name": r.name,
            "ok": r.ok,
            "coherent": r.coherent,
        }
        if r.error:
            entry["error"] = r.error
        if r.coherent:
            entry["environment"] = list(r.environment)
            entry["pure"] = r.pure
            entry["within_bounds"] = r.within_bounds
            entry["claims_solved"] = len(r.solved)
            entry["claims_unsolved"] = len(r.unsolved)
            if r.unsolved:
                entry["unsolved"] = [str(a) for a in r.unsolved]
        if r.notes:
            entry["notes"] = list(r.notes)
        entries.append(entry)
    ok_count = sum(1 for r in reports if r.ok)
    report = {
        "command": "witnesses",
        "gadget_file": args.gadget,
        "kind": gadget.kind,
        "rho": gadget.rho,
        "kappa": gadget.kappa,
        "pure": gadget.pure,
        "atom": str(gadget.atom),
        "witnesses_total": len(reports),
        "witnesses_ok": ok_count,
        "witness_reports": entries,
    }
    return (EXIT_YES if ok_count == len(reports) else EXIT_NO), report


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ersynth",
        description="Environment-restricted Petri net synthesis from transition systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a bounded net for a TS")
    p.add_argument("ts")
    p.add_argument("--rho", type=_bound, default=None, metavar="N|unbounded")
    p.add_argument("--kappa", type=_bound, default=None, metavar="N|unbounded")
    p.add_argument("--pure", action="store_true")
    p.add_argument("--strategy", choices=("auto", "exhaustive", "heuristic"), default="auto")
    p.add_argument("--verify", action="store_true", help="check the net against the TS")
    p.add_argument("--out", help="write the synthesized net here")
    p.add_argument("--regions-out", help="write the admissible regions here")
    p.add_argument("--scan-all", action="store_true", help="report every failing atom, not just the first")
    p.add_argument("--jobs", type=int, default=1, help="parallel atom solving")
    p.add_argument("--max-selections", type=int, default=None, help="cap on allowed-set pairs per atom")
    p.add_argument("--heuristic-budget", type=int, default=8)
    p.add_argument("--dump-systems", help="append every linear system to this file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("verify", help="check a net's reachability graph against a TS")
    p.add_argument("ts")
    p.add_argument("net")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("atoms", help="list the separation atoms of a TS")
    p.add_argument("ts")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_atoms)

    p = sub.add_parser("check-region", help="expand and validate region specs against a TS")
    p.add_argument("ts")
    p.add_argument("region")
    p.add_argument("--atom", help="also check whether the region solves this atom (ssa:s,t / essa:e,s)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_check_region)

    p = sub.add_parser("brute", help="exhaustive bounded-value region search for one atom")
    p.add_argument("ts")
    p.add_argument("--atom", required=True)
    p.add_argument("--bound", type=int, default=2)
    p.add_argument("--rho", type=_bound, default=None)
    p.add_argument("--kappa", type=_bound, default=None)
    p.add_argument("--pure", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_brute)

    p = sub.add_parser("gen-hs", help="build the hitting-set gadget TS")
    p.add_argument("instance")
    p.add_argument("--out", help="write the gadget file here (default: stdout)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_gen_hs)

    p = sub.add_parser("gen-1in3", help="build the pure one-in-three gadget TS")
    p.add_argument("instance")
    p.add_argument("--out", help="write the gadget file here (default: stdout)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_gen_1in3)

    p = sub.add_parser("witnesses", help="validate the certificate regions bundled in a gadget file")
    p.add_argument("gadget")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_witnesses)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        code, report = args.handler(args)
    except InputError as exc:
        report = {"command": args.command, "error": str(exc)}
        _emit(report, getattr(args, "json", False))
        return EXIT_INPUT
    _emit(report, args.json)
    return code


if __name__ == "__main__":
    sys.exit(main())
