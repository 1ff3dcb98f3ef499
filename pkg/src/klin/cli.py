"""Command-line front end: ``klin <command> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from . import instance as inst_mod
from .algebra import as_spec
from .deps import find_dependency_exhaustive, kikuchi_search, verify_dependency
from .errors import InconsistentError, KlinError, ResourceCapError, ValidationError
from .instance import KLinInstance, gen_random, gen_semirandom, lhs_pattern
from .kikuchi import build_even_field, build_even_group, dump as dump_kikuchi
from .refute import Certificate, reduce_group_pipeline, refute, refute_even_field, refute_even_group_robust, refute_odd
from .simple import simple_refute
from .sos import build_max_entropy, dump_pe, expansion_check, parse_pe, to_boolean_pe, verify_pe

EXIT_OK, EXIT_CAP, EXIT_INVALID = 0, 2, 3
VERIFY_TOL = 1e-9


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _load(path: str) -> KLinInstance:
    try:
        return inst_mod.load(path)
    except OSError as exc:
        raise ValidationError(f"cannot read instance {path!r}: {exc}") from None


def _taus(cert: Certificate) -> dict[int, int] | None:
    taus = cert.params.get("taus")
    return None if taus is None else {t + 1: int(v) for t, v in enumerate(taus)}


def recompute(cert: Certificate, I: KLinInstance) -> Certificate:
    """Re-run the pipeline named by ``cert.kind`` with its recorded parameters."""
    p = cert.params
    for key, have in (("n", I.n), ("k", I.k), ("m", I.m), ("group", str(I.spec))):
        if key in p and p[key] != have:
            raise ValidationError(f"certificate {key}={p[key]!r} does not match instance ({have!r})")
    method = p.get("norm_method", "auto")
    kind = cert.kind
    if kind == "even-field":
        return refute_even_field(I, p["ell"], p.get("eps"), method)
    if kind == "even-group":
        return refute_even_group_robust(I, p["ell"], p.get("arity"), method)
    if kind == "group-reduction":
        return reduce_group_pipeline(I, p["ell"], p["eps"], method)
    if kind in ("odd", "odd-group-experimental"):
        return refute_odd(I, p["ell"], p["eps"], p.get("eta"), _taus(cert), method,
                          experimental_group=kind != "odd")
    if kind.startswith("simple-"):
        return simple_refute(I, p["ell"], p["variant"], p["eps"])
    raise ValidationError(f"unknown certificate kind {kind!r}")


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args: argparse.Namespace) -> int:
    spec = as_spec(args.group)
    if args.pattern == "random" and not args.semirandom:
        I = gen_random(spec, args.n, args.k, args.m, args.seed)
    else:
        lhs = lhs_pattern(args.pattern, spec, args.n, args.k, args.m, args.seed)
        I = gen_semirandom(lhs, spec, seed=args.seed, k=args.k)
    _emit(inst_mod.serialize(I), args.output)
    return EXIT_OK


def cmd_refute(args: argparse.Namespace) -> int:
    I = _load(args.instance)
    cert = refute(I, args.l, args.eps, eta=args.eta, norm_method=args.norm)
    cert.config = _config(args)
    _emit(cert.to_json() + "\n", args.output)
    return EXIT_OK


def cmd_simple(args: argparse.Namespace) -> int:
    I = _load(args.instance)
    cert = simple_refute(I, args.l, args.variant, args.eps)
    cert.config = _config(args)
    _emit(cert.to_json() + "\n", args.output)
    return EXIT_OK


def cmd_deps(args: argparse.Namespace) -> int:
    I = _load(args.instance)
    H = [eq.lhs for eq in I.equations]
    doc: dict[str, Any] = {"mode": args.mode, "config": _config(args)}
    if args.mode == "exhaustive":
        dep = find_dependency_exhaustive(H, args.max_size, I.spec)
        doc["complete"] = True
    else:
        res = kikuchi_search(H, args.l, I.spec, args.budget, args.seed)
        dep = res.dependency
        doc.update(complete=res.complete, visited=res.visited, cycles_checked=res.cycles_checked)
        if dep is not None and dep.length > args.max_size:
            doc["note"] = f"dependency of length {dep.length} exceeds --max-size"
    if dep is None:
        doc["dependency"] = None
    else:
        if not verify_dependency(H, dep, I.spec):
            raise ValidationError("internal error: dependency failed verification")
        doc["dependency"] = [{"position": p, "coefficient": I.spec.format_literal(c)} for p, c in dep.terms]
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK


def cmd_sos(args: argparse.Namespace) -> int:
    I = _load(args.instance)
    if args.action == "build":
        pe = build_max_entropy(I, args.d, order=args.order)
        _emit(dump_pe(pe), args.output)
        return EXIT_OK
    if args.action == "verify":
        pe = parse_pe(Path(args.pe).read_text())
        rep = verify_pe(pe, I)
        doc = {"ok": rep.ok, "min_eig": rep.min_eig, "classes": rep.n_classes, "messages": rep.messages}
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.output)
        return EXIT_OK if rep.ok else EXIT_INVALID
    if args.action == "boolean":
        pe = parse_pe(Path(args.pe).read_text()) if args.pe else build_max_entropy(I, args.d)
        if not pe.complete:
            raise InconsistentError(f"max-entropy construction failed at {pe.error_at}", pe.error_at)
        B = to_boolean_pe(pe, args.d, I)
        doc = {"ok": B.ok, "objective": B.objective, "sum_rule_err": B.sum_rule_err, "imag_err": B.imag_err,
               "booleanity_err": B.booleanity_err, "degree": B.d}
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.output)
        return EXIT_OK if B.ok else EXIT_INVALID
    ok, wit = expansion_check([eq.lhs for eq in I.equations], args.l, args.beta, I.spec)
    doc = {"expanding": ok, "witness": None if wit is None else {"positions": list(wit[0]),
                                                                  "coefficients": list(wit[1])}}
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK


def cmd_kikuchi(args: argparse.Namespace) -> int:
    I = _load(args.instance)
    K = build_even_field(I, args.l) if I.spec.is_field else build_even_group(I, args.l)
    _emit(dump_kikuchi(K), args.output)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    I = _load(args.instance)
    text = Path(args.document).read_text()
    if text.startswith("pe v1"):
        rep = verify_pe(parse_pe(text), I)
        print(json.dumps({"ok": rep.ok, "messages": rep.messages}, indent=2))
        return EXIT_OK if rep.ok else EXIT_INVALID
    cert = Certificate.from_json(text)
    fresh = recompute(cert, I)
    diff = abs(fresh.alg_val - cert.alg_val)
    ok = diff <= VERIFY_TOL and fresh.kind == cert.kind
    print(json.dumps({"ok": ok, "claimed": cert.alg_val, "recomputed": fresh.alg_val, "difference": diff,
                      "kind": cert.kind}, indent=2))
    if not ok:
        print(f"mismatch: claimed alg_val {cert.alg_val!r} vs recomputed {fresh.alg_val!r}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_INVALID


def _parse_sweep(text: str) -> list[int]:
    try:
        name, rng = text.split("=", 1)
        lo, hi, step = (int(x) for x in rng.split(":"))
    except ValueError:
        raise ValidationError(f"--sweep must look like m=lo:hi:step, got {text!r}") from None
    if name != "m" or step <= 0 or lo <= 0 or hi < lo:
        raise ValidationError(f"bad --sweep {text!r}")
    return list(range(lo, hi + 1, step))


def _bench_row(job: tuple) -> dict[str, Any]:
    group, n, k, m, seed, ell, eps, pattern, norm = job
    spec = as_spec(group)
    if pattern == "random":
        I = gen_random(spec, n, k, m, seed)
    else:
        I = gen_semirandom(lhs_pattern(pattern, spec, n, k, m, seed), spec, seed=seed, k=k)
    t0 = time.perf_counter()
    cert = refute(I, ell, eps, norm_method=norm)
    ms = (time.perf_counter() - t0) * 1000
    stage = next((s for s in _walk(cert.trail) if "norm" in s), {})
    return {"m": m, "seed": seed, "alg_val": f"{cert.alg_val:.12g}", "norm": f"{stage.get('norm', float('nan')):.12g}",
            "d": f"{stage.get('d', float('nan')):.12g}", "runtime_ms": f"{ms:.3f}"}


def _walk(trail):
    for s in trail:
        yield s
        if isinstance(s.get("sub"), list):
            yield from _walk(s["sub"])


def cmd_bench(args: argparse.Namespace) -> int:
    ms = _parse_sweep(args.sweep)
    jobs = [(args.group, args.n, args.k, m, s, args.l, args.eps, args.pattern, args.norm)
            for m in ms for s in range(args.seed, args.seed + args.seeds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_bench_row, jobs))
    else:
        rows = [_bench_row(j) for j in jobs]
    rows.sort(key=lambda r: (r["m"], r["seed"]))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["m", "seed", "alg_val", "norm", "d", "runtime_ms"], lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _positive(kind):
    def conv(text: str):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
        if v <= 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text!r}")
        return v
    return conv


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors (exit 3), keeping 2 for resource caps."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="klin", description="Certified refutation of sparse linear equation systems.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random or semirandom instance")
    g.add_argument("--group", required=True)
    g.add_argument("--n", type=_positive(int), required=True)
    g.add_argument("--k", type=_positive(int), required=True)
    g.add_argument("--m", type=_positive(int), required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--pattern", choices=["random", "prefix", "clustered", "star"], default="random")
    g.add_argument("--semirandom", action="store_true", help="random right-hand sides over the chosen pattern")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("refute", help="emit a refutation certificate")
    r.add_argument("instance")
    r.add_argument("--l", type=_positive(int), required=True)
    r.add_argument("--eps", type=_positive(float), default=0.5)
    r.add_argument("--eta", type=_positive(int))
    r.add_argument("--norm", choices=["auto", "dense", "power"], default="auto")
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_refute)

    s = sub.add_parser("simple", help="brute-force local refuter")
    s.add_argument("instance")
    s.add_argument("--l", type=_positive(int), required=True)
    s.add_argument("--variant", choices=["random", "semirandom"], default="random")
    s.add_argument("--eps", type=_positive(float), default=0.5)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_simple)

    d = sub.add_parser("deps", help="search for a short linear dependency")
    d.add_argument("instance")
    d.add_argument("--mode", choices=["exhaustive", "kikuchi"], default="exhaustive")
    d.add_argument("--max-size", type=_positive(int), default=4)
    d.add_argument("--l", type=_positive(int), default=1)
    d.add_argument("--budget", type=_positive(int))
    d.add_argument("--seed", type=int)
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_deps)

    o = sub.add_parser("sos", help="max-entropy pseudo-expectation tools")
    o.add_argument("action", choices=["build", "verify", "boolean", "expand"])
    o.add_argument("instance")
    o.add_argument("--d", type=_positive(int), default=4)
    o.add_argument("--pe", help="pseudo-expectation dump (verify, boolean)")
    o.add_argument("--order", choices=["fifo", "lifo"], default="fifo")
    o.add_argument("--l", type=_positive(int), default=2)
    o.add_argument("--beta", type=float, default=1.0)
    o.add_argument("-o", "--output")
    o.set_defaults(func=cmd_sos)

    kk = sub.add_parser("kikuchi", help="dump the even-arity Kikuchi matrix")
    kk.add_argument("instance")
    kk.add_argument("--l", type=_positive(int), required=True)
    kk.add_argument("-o", "--output")
    kk.set_defaults(func=cmd_kikuchi)

    v = sub.add_parser("verify", help="re-check a certificate or pseudo-expectation dump")
    v.add_argument("document")
    v.add_argument("instance")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="sweep m and seeds, write CSV")
    b.add_argument("--group", default="p=3")
    b.add_argument("--n", type=_positive(int), default=8)
    b.add_argument("--k", type=_positive(int), default=2)
    b.add_argument("--l", type=_positive(int), default=1)
    b.add_argument("--eps", type=_positive(float), default=0.5)
    b.add_argument("--sweep", default="m=20:100:20")
    b.add_argument("--seeds", type=_positive(int), default=3)
    b.add_argument("--seed", type=int, default=0, help="first seed")
    b.add_argument("--pattern", choices=["random", "prefix", "clustered", "star"], default="random")
    b.add_argument("--norm", choices=["auto", "dense", "power"], default="auto")
    b.add_argument("--jobs", type=_positive(int), default=1)
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceCapError as exc:
        print(f"klin: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (KlinError, ValueError) as exc:
        print(f"klin: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"klin: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
