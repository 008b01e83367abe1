"""Command-line driver: landmark audits, construction runs and their reports.

Every subcommand writes fixed file names under --out and exits 0 when its
report passes, 1 when it records a failure, and 2 on bad input.
"""
from __future__ import annotations

import argparse
import configparser
import os
import sys
from fractions import Fraction

from .arith.rings import context_from_mapping, parse_exact, parse_vector
from .errors import AvoidsetError, ConfigError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _write(out, name, text):
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, name), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------- audit-landmarks

def load_system_config(path, precision=None):
    """(system, level, eps, extra audit kwargs) from a [system]/[audit] file."""
    from .landmark.systems import AlgebraicSystem, DyadicSystem, system_for

    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_string(fh.read())
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read system config: {exc}") from None
    if not cp.has_section("system"):
        raise ConfigError("missing [system] section")
    m = dict(cp["system"])
    if precision is not None:
        m["precision"] = str(precision)
    kind = m.get("kind", "").strip()
    if kind == "dyadic":
        sys_ = DyadicSystem(base=int(parse_exact(m.get("base", "2"))))
    else:
        ctx = context_from_mapping(m)
        kw = {}
        if kind == "algebraic" and "c2" in m:
            kw["c2"] = parse_exact(m["c2"])
        sys_ = system_for(ctx, **kw)
        if kind == "algebraic" and not isinstance(sys_, AlgebraicSystem):
            raise ConfigError("algebraic kind did not produce an algebraic system")
    # parameter overrides make deliberately wrong systems for negative controls
    for key in ("gamma", "sigma"):
        if key in m:
            setattr(sys_, key, Fraction(parse_exact(m[key])))
    au = cp["audit"] if cp.has_section("audit") else {}
    level = int(parse_exact(au.get("level", "6"))) if au else 6
    eps = Fraction(parse_exact(au.get("eps", "0"))) if au else Fraction(0)
    kw = {}
    if au and "weights" in au:
        kw["ws"] = tuple(int(w) for w in parse_vector(au["weights"]))
    return sys_, level, eps, kw


def cmd_audit_landmarks(args) -> int:
    from .landmark.audit import audit_system

    sys_, level, eps, kw = load_system_config(args.scenario, args.precision)
    rep = audit_system(sys_, level, eps, **kw)
    _write(args.out, "audit.tsv", rep.to_tsv())
    fails = rep.failures()
    summary = [f"system={rep.system}", f"level={level}", f"eps={eps}",
               f"rows={len(rep.rows)}", f"failures={len(fails)}", f"status={'pass' if rep.passed else 'fail'}"]
    summary += [f"fail\t{p}\t{lvl}" for p, lvl, *_ in fails]
    _write(args.out, "audit_summary.txt", "\n".join(summary) + "\n")
    print(f"audit {rep.system}: {'pass' if rep.passed else 'fail'} ({len(fails)} failing rows)")
    return EXIT_OK if rep.passed else EXIT_FAIL


# ---------------------------------------------------------------- construction subcommands

def _build(args):
    from .construction import build_any, load_scenario

    sc = load_scenario(args.scenario, args.precision)
    return build_any(sc, args.stages, args.uniform_depth)


def _measure_reports(tr):
    from .measure import assign_measure, box_dimension, frostman_audit, schedule_delta, target_dimension

    m = assign_measure(tr)
    s = target_dimension(tr)
    delta = schedule_delta(tr) if len(tr.stages) > 1 else Fraction(0)
    fr = frostman_audit(m, tr, s, delta)
    dim = box_dimension(tr) if tr.final.scale > tr.stages[0].E.scale else None
    return m, fr, dim


def _write_measure(out, tr, m, fr, dim):
    _write(out, "measure.tsv", m.serialize())
    _write(out, "frostman.tsv", fr.to_tsv())
    if dim is not None:
        _write(out, "dimension.tsv", dim.to_tsv())
    ren = "".join(f"stage {j}: lost mass {w}\n" for j, w in m.renormalized)
    _write(out, "renormalization.txt", ren or "none\n")


def cmd_build(args) -> int:
    from .construction import export_trace
    from .verify import cross_validate

    tr = _build(args)
    export_trace(tr, args.out)
    m, fr, dim = _measure_reports(tr)
    _write_measure(args.out, tr, m, fr, dim)
    rep = cross_validate(tr, workers=args.workers)
    _write(args.out, "validation.tsv", rep.to_tsv())
    print(f"build {tr.scenario.name}: {len(tr.final)} cubes at scale {tr.final.scale}; "
          f"validation {'pass' if rep.passed else 'fail'} ({len(rep.failures())} failing rows)")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    from .verify import cross_validate

    tr = _build(args)
    rep = cross_validate(tr, workers=args.workers)
    _write(args.out, "validation.tsv", rep.to_tsv())
    print(f"verify {tr.scenario.name}: {'pass' if rep.passed else 'fail'} "
          f"({len(rep.rows)} rows, {len(rep.failures())} failing)")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_measure(args) -> int:
    tr = _build(args)
    m, fr, dim = _measure_reports(tr)
    _write_measure(args.out, tr, m, fr, dim)
    print(f"measure {tr.scenario.name}: frostman {'pass' if fr.passed else 'fail'} at exponent "
          f"{float(fr.s - fr.delta):.6f}, worst C {fr.C:.4f}")
    return EXIT_OK if fr.passed else EXIT_FAIL


def cmd_capset_limit(args) -> int:
    from .measure import capset_table, capset_trend_ok, capset_tsv

    tr = _build(args)
    last = tr.stages[-1]
    depth = last.N if last.N is not None else tr.final.scale
    rows = capset_table(tr, range(1, min(depth, tr.final.scale) + 1))
    ok = capset_trend_ok(rows)
    _write(args.out, "capset.tsv", capset_tsv(rows))
    _write(args.out, "capset_summary.txt", f"depths=1..{rows[-1][0]}\ntrend={'nondecreasing' if ok else 'broken'}\n")
    print(f"capset-limit {tr.scenario.name}: depths 1..{rows[-1][0]}, exponent trend "
          f"{'nondecreasing' if ok else 'broken'}")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "audit-landmarks": cmd_audit_landmarks,
    "build": cmd_build,
    "verify": cmd_verify,
    "measure": cmd_measure,
    "capset-limit": cmd_capset_limit,
}


def make_parser():
    ap = argparse.ArgumentParser(prog="avoidset", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="scenario (or system config) file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--stages", type=int, default=None)
        p.add_argument("--uniform-depth", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--precision", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AvoidsetError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
