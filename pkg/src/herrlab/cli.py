"""Command line entry point.

Exit codes: 0 stabilized or passed, 1 usage or configuration error,
2 not stabilized, 3 duality mismatch or lemma violation.
"""

import argparse
import hashlib
import json
import sys
import time

from . import __version__
from .config import canonical_json, config_hash, parse_config
from .errors import DualityMismatch, HerrlabError, LemmaViolation, NotStabilized
from .pipeline import (BUILTINS, LEVEL_CLOCK, PipelineConfig, duality_from_reports, iwasawa_sequence, phi_herr,
                       psi_herr, verify_exactness_lemmas)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_NOT_STABILIZED, EXIT_MISMATCH = 0, 1, 2, 3
DUAL_OF = {"cyclotomic-Q3-trivial": "cyclotomic-Q3-chiLT", "cyclotomic-Q3-chiLT": "cyclotomic-Q3-trivial"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_args(sp, config=True):
    if config:
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--config", help="configuration file")
        src.add_argument("--builtin", choices=sorted(BUILTINS), help="builtin case (default cyclotomic-Q3-trivial)")
        sp.add_argument("--m", type=int, help="coefficients modulo pi^m")
    sp.add_argument("--workers", type=int, help="levels computed concurrently")
    sp.add_argument("--out", help="report path (default: stdout)")


def build_parser():
    parser = _Parser(prog="herrlab", description="Galois and Iwasawa cohomology from Lubin-Tate Herr complexes.")
    parser.add_argument("--version", action="version", version=f"herrlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (("herr-phi", "cohomology of the phi-Herr complex"),
                       ("herr-psi", "cohomology of the psi-Herr complex"),
                       ("iwasawa", "kernel and cokernel of psi - 1 along the n-tower")):
        _add_run_args(sub.add_parser(name, help=text))
    sp = sub.add_parser("verify-lemmas", help="exactness of Fr - 1 on truncated windows")
    _add_run_args(sp)
    sp.add_argument("--n-max", type=int)
    sp.add_argument("--N-max", type=int, dest="N_max")
    sp = sub.add_parser("duality", help="compare |H^i| of a module with |H^(2-i)| of its dual")
    _add_run_args(sp)
    dual = sp.add_mutually_exclusive_group()
    dual.add_argument("--dual-config")
    dual.add_argument("--dual-builtin", choices=sorted(BUILTINS))
    sp = sub.add_parser("selftest", help="run the acceptance checks")
    _add_run_args(sp, config=False)
    sp.add_argument("--no-stretch", action="store_true", help="skip the ramified stretch case")
    return parser


def load_config(args):
    """(PipelineConfig, raw sections or None) from --config/--builtin plus overrides."""
    raw = None
    if getattr(args, "config", None):
        cfg, raw = parse_config(args.config)
    else:
        cfg = PipelineConfig.builtin(getattr(args, "builtin", None) or "cyclotomic-Q3-trivial")
    if getattr(args, "m", None) is not None:
        cfg.m = args.m
    if args.workers is not None:
        cfg.workers = args.workers
    cfg.validate()
    return cfg, raw


def _schedule(cfg):
    return {k: list(getattr(cfg, k)) for k in ("N_levels", "n_levels", "psi_N_levels", "psi_n_levels")}


def build_document(command, body, outcome, manifest_extra):
    """Versioned report with a manifest; the manifest hash covers the body."""
    manifest = {"engine_version": __version__, "outcome": outcome,
                "report_hash": hashlib.sha256(canonical_json(body).encode()).hexdigest()}
    manifest.update(manifest_extra)
    return {"schema_version": SCHEMA_VERSION, "command": command, "manifest": manifest, "report": body}


def emit_report(doc, path):
    """Canonical JSON with sorted keys; ``None`` writes to stdout."""
    text = json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=True) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    if not path:
        raise OSError("empty report path")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def emit_timing(path, elapsed):
    if path:
        with open(path + ".timing.json", "w", encoding="utf-8") as fh:
            json.dump({"total_seconds": round(elapsed, 3), "levels": LEVEL_CLOCK.snapshot()}, fh, indent=2)


def _cohomology(cfg, kind):
    rep = {"phi": phi_herr, "psi": psi_herr}[kind](cfg, raise_on_failure=False)
    code = EXIT_OK if rep.stabilized else EXIT_NOT_STABILIZED
    return rep.to_json(), rep.outcome, code


def _iwasawa(cfg):
    rep = iwasawa_sequence(cfg)
    return rep.to_json(), rep.outcome, EXIT_OK if rep.stabilized else EXIT_NOT_STABILIZED


def _lemmas(cfg, raw, args):
    if cfg.frobenius not in ("standard", "cyclotomic"):
        raise HerrlabError("verify-lemmas supports the standard and cyclotomic Frobenius only")
    get = (lambda key, default: raw.int("lemmas", key, default)) if raw is not None else (lambda key, default: default)
    m_values = raw.ints("lemmas", "m_values", (1, 2)) if raw is not None else (1, 2)
    n_max = args.n_max if args.n_max is not None else get("n_max", 8)
    N_max = args.N_max if args.N_max is not None else get("N_max", 60)
    try:
        rep = verify_exactness_lemmas(cfg.field_params(), cfg.frobenius, tuple(m_values), n_max, N_max)
    except LemmaViolation as exc:
        return {"passed": False, "error": str(exc)}, "LemmaViolation", EXIT_MISMATCH
    body = rep.to_json()
    return body, "pass" if rep.passed else "LemmaViolation", EXIT_OK if rep.passed else EXIT_MISMATCH


def _dual_config(cfg, raw, args):
    if args.dual_config:
        return parse_config(args.dual_config)[0]
    name = args.dual_builtin
    if name is None and raw is not None:
        path = raw.get("duality", "config")
        if path is not None:
            return parse_config(path.strip())[0]
        name = raw.get("duality", "builtin")
        name = name.strip() if name is not None else None
    if name is None:
        name = DUAL_OF.get(cfg.case)
    if name is None:
        raise HerrlabError("no dual module given; use --dual-config or --dual-builtin")
    return PipelineConfig.builtin(name, m=cfg.m, workers=cfg.workers)


def _duality(cfg, raw, args):
    cfg_b = _dual_config(cfg, raw, args)
    rep_a, rep_b = phi_herr(cfg, raise_on_failure=False), phi_herr(cfg_b, raise_on_failure=False)
    body = {"a": rep_a.to_json(), "b": rep_b.to_json()}
    if not (rep_a.stabilized and rep_b.stabilized):
        return body, "NotStabilized", EXIT_NOT_STABILIZED
    try:
        dual = duality_from_reports(rep_a, rep_b)
    except DualityMismatch as exc:
        body.update({"orders_a": rep_a.orders(), "orders_b": rep_b.orders(), "passed": False, "error": str(exc)})
        return body, "DualityMismatch", EXIT_MISMATCH
    body.update({"orders_a": dual.orders_a, "orders_b": dual.orders_b, "passed": True})
    return body, "pass", EXIT_OK


def _selftest(args):
    from .selftest import run_selftest
    workers = args.workers or 1
    body = run_selftest(workers=workers, include_stretch=not args.no_stretch)
    for r in body["criteria"]:
        status = r.get("status", "PASS" if r["passed"] else "FAIL").upper()
        print(f"[{status}] {r['id']}: {r['name']}", file=sys.stderr)
    return body, "pass" if body["passed"] else "fail", EXIT_OK if body["passed"] else EXIT_MISMATCH


def run(args):
    """Execute a parsed command; returns the exit code."""
    LEVEL_CLOCK.reset()
    start = time.perf_counter()
    if args.command == "selftest":
        body, outcome, code = _selftest(args)
        extra = {"config_hash": None, "schedule": None}
    else:
        cfg, raw = load_config(args)
        if args.command in ("herr-phi", "herr-psi"):
            body, outcome, code = _cohomology(cfg, args.command[-3:])
        elif args.command == "iwasawa":
            body, outcome, code = _iwasawa(cfg)
        elif args.command == "verify-lemmas":
            body, outcome, code = _lemmas(cfg, raw, args)
        else:
            body, outcome, code = _duality(cfg, raw, args)
        extra = {"config_hash": config_hash(cfg), "schedule": _schedule(cfg)}
    emit_report(build_document(args.command, body, outcome, extra), args.out)
    emit_timing(args.out, time.perf_counter() - start)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except NotStabilized as exc:
        print(f"herrlab: {exc}", file=sys.stderr)
        return EXIT_NOT_STABILIZED
    except (DualityMismatch, LemmaViolation) as exc:
        print(f"herrlab: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except HerrlabError as exc:
        print(f"herrlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"herrlab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
