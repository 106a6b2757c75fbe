"""Command-line front end.

Exit codes: 0 success / checks passed, 1 check failure or method
disagreement, 2 usage or validation error.  Matrices are emitted as JSON,
word-invariant tables as CSV.  The cache directory can be overridden with
the environment variable VEECHREP_CACHE_DIR.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import operators as ops
from . import connection as conn
from . import transport as tr
from . import frobenius as fr
from . import monodromy as mono
from . import cache


def _settings_from_args(args):
    kw = {}
    if getattr(args, "rtol", None):
        kw["rtol"] = args.rtol
    if getattr(args, "atol", None):
        kw["atol"] = args.atol
    if getattr(args, "max_word_len", None):
        kw["max_word_len"] = args.max_word_len
    return tr.TransportSettings(**kw) if kw else tr.DEFAULT_SETTINGS


def _emit(args, data: bytes):
    if getattr(args, "output", None):
        with open(args.output, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())


def _json_bytes(obj):
    return (json.dumps(obj, sort_keys=True, indent=1) + "\n").encode()


def cmd_check(args):
    failures = []
    notes = []
    k = args.level
    suites = ("algebraic", "numeric") if args.suite == "all" else (args.suite,)

    if "algebraic" in suites:
        mats = ops.all_omega_hat_matrices(k)
        braid = ops.braid_relation_defects(k, mats)
        bad = [name for name, ok in braid if not ok]
        if bad:
            failures.append(f"braid relations failing: {bad[:3]}...")
        notes.append(f"braid relations: {len(braid) - len(bad)}/{len(braid)} hold")
        try:
            s_tot, fixed = ops.ward_scalars(k, mats)
            notes.append(f"sum over pairs = {s_tot} * Id "
                         f"(printed constant 3*hbar*k^2 does not match; "
                         f"measured -3k(k-1))")
            notes.append(f"fixed-label scalars: {sorted(set(fixed.values()))}")
        except AssertionError as exc:
            failures.append(str(exc))
        rs = conn.residues(k, mats)
        total = sum(rs.matrices[m] for m in range(1, 6))
        expect = sum(mats[p] for p in mats if p[1] <= 5)
        if np.any(total != expect):
            failures.append("residue partition does not sum to the 5-point total")
        for kk in range(1, 13):
            from math import comb
            if conn.verlinde_dim(2, kk) != comb(kk + 3, 3):
                failures.append(f"verlinde dimension mismatch at k={kk}")

    if "numeric" in suites:
        st = _settings_from_args(args)
        for m in range(1, 6):
            num = conn.pullback_residue_at(k, conn.ZETA**m)
            ref = conn.residues(k).matrices[m].astype(complex)
            den = np.linalg.norm(ref) or 1.0
            if np.linalg.norm(num - ref) / den > 1e-10:
                failures.append(f"contour residue mismatch at pole {m}")
        rep = mono.assemble_rep(k, method="both", settings=st)
        rc = mono.relation_check(rep)
        notes.append(f"relation defects: d5={rc['d5']:.3e} d2={rc['d2']:.3e}")
        if not rc["pass"]:
            failures.append("triangle-group relation defects above 1e-4")
        sm = mono.spectrum_match(rep)
        notes.append(f"spectral charpoly defect: {sm['charpoly_defect']:.3e}")
        if not sm["pass"]:
            failures.append("spectral invariant mismatch")

    for line in notes:
        print("note:", line)
    if failures:
        for line in failures:
            print("FAIL:", line)
        return 1
    print(f"all {args.suite} checks passed at level {k}")
    return 0


def cmd_monodromy(args):
    st = _settings_from_args(args)
    settings_digest = {
        "rtol": st.rtol, "atol": st.atol, "max_word_len": st.max_word_len,
        "quad_nodes": st.quad_nodes, "method": args.method, "frame": args.frame,
        "eps_list": list(args.eps),
    }
    key = cache.cache_key("monodromy", args.level, settings_digest)
    if not args.no_cache:
        hit = cache.load(key)
        if hit is not None:
            _emit(args, hit)
            return 0
    try:
        rep = mono.assemble_rep(args.level, method=args.method, settings=st,
                                eps_list=tuple(args.eps), frame=args.frame)
    except mono.AssemblyError as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return 1
    data = _json_bytes(rep.to_json())
    if not args.no_cache:
        cache.store(key, data)
    _emit(args, data)
    return 0


def cmd_word(args):
    st = _settings_from_args(args)
    rep = mono.assemble_rep(args.level, method=args.method, settings=st)
    rows = []
    for text in args.words:
        info = mono.evaluate_word(text, rep)
        rows.append(info)
    header = ("word,scale_free_trace,spectral_ratio,prop_to_identity,"
              "eigenvalue_arguments\n")
    lines = [header]
    for info in rows:
        angles = ";".join(f"{a:.12g}" for a in info["eigenvalue_arguments"])
        lines.append(
            f"{info['word']},{info['scale_free_trace']:.12g},"
            f"{info['spectral_ratio']:.12g},"
            f"{int(info['proportional_to_identity'])},{angles}\n"
        )
    _emit(args, "".join(lines).encode())
    return 0


def cmd_ops(args):
    mats = ops.all_omega_hat_matrices(args.level)
    if args.pair:
        i, j = (int(x) for x in args.pair.split(","))
        payload = ops.matrix_to_json(mats[(i, j)], args.level)
    else:
        payload = {f"{i},{j}": ops.matrix_to_json(m, args.level)
                   for (i, j), m in mats.items()}
    _emit(args, _json_bytes(payload))
    return 0


def cmd_residues(args):
    _emit(args, _json_bytes(conn.residues(args.level).to_json()))
    return 0


def cmd_verlinde(args):
    dims = {k: conn.verlinde_dim(args.genus, k)
            for k in range(1, args.level + 1)}
    _emit(args, _json_bytes({"genus": args.genus, "dims": dims}))
    return 0


def cmd_transport(args):
    st = _settings_from_args(args)
    with open(args.path) as fh:
        path = tr.PathSpec.from_json(json.load(fh))
    Y = tr.ode_transport(args.level, path, settings=st)
    _emit(args, _json_bytes(ops.matrix_to_json(Y, args.level)))
    return 0


def cmd_hyperlog(args):
    letters = tuple(int(x) for x in args.word.split(","))
    val = tr.hyperlog(letters, args.upper, _settings_from_args(args))
    _emit(args, _json_bytes({"word": list(letters), "upper": args.upper,
                             "value": [val.real, val.imag]}))
    return 0


def cmd_cache(args):
    if args.action == "ls":
        for name in cache.entries():
            print(name)
    elif args.action == "clear":
        print(f"removed {cache.clear()} entries")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="veechrep",
        description="Quantum representations of the (2,5,inf) triangle group "
                    "from the flat connection on the five-punctured line.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(q, level=True):
        if level:
            q.add_argument("--level", "-k", type=int, required=True)
        q.add_argument("--rtol", type=float, default=None)
        q.add_argument("--atol", type=float, default=None)
        q.add_argument("--max-word-len", type=int, default=None)
        q.add_argument("--output", "-o", default=None)

    q = sub.add_parser("check", help="run the verification suites")
    add_common(q)
    q.add_argument("--suite", choices=("algebraic", "numeric", "all"),
                   default="algebraic")
    q.set_defaults(func=cmd_check)

    q = sub.add_parser("monodromy", help="assemble rho(ST), rho(T)")
    add_common(q)
    q.add_argument("--method", choices=("series", "ode-limit", "both"),
                   default="both")
    q.add_argument("--frame", choices=("sp", "monomial"), default="sp")
    q.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    q.add_argument("--no-cache", action="store_true")
    q.set_defaults(func=cmd_monodromy)

    q = sub.add_parser("word", help="evaluate group words")
    add_common(q)
    q.add_argument("--method", choices=("series", "ode-limit", "both"),
                   default="series")
    q.add_argument("words", nargs="+",
                   help="words over S,T with lowercase for inverses")
    q.set_defaults(func=cmd_word)

    q = sub.add_parser("ops", help="emit operator matrices")
    add_common(q)
    q.add_argument("--pair", default=None, help="e.g. 1,2")
    q.set_defaults(func=cmd_ops)

    q = sub.add_parser("residues", help="emit the five residues")
    add_common(q)
    q.set_defaults(func=cmd_residues)

    q = sub.add_parser("verlinde", help="state-space dimensions")
    add_common(q)
    q.add_argument("--genus", "-g", type=int, default=2)
    q.set_defaults(func=cmd_verlinde)

    q = sub.add_parser("transport", help="transport along a path file")
    add_common(q)
    q.add_argument("--path", required=True, help="PathSpec JSON file")
    q.set_defaults(func=cmd_transport)

    q = sub.add_parser("hyperlog", help="iterated integral of a word")
    add_common(q, level=False)
    q.add_argument("--word", required=True, help="comma list of exponents 1..5")
    q.add_argument("--upper", type=float, default=1.0)
    q.set_defaults(func=cmd_hyperlog)

    q = sub.add_parser("cache", help="inspect the artifact cache")
    q.add_argument("action", choices=("ls", "clear"))
    q.set_defaults(func=cmd_cache)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if getattr(args, "level", 1) < 1:
            print("level must be >= 1", file=sys.stderr)
            return 2
        return args.func(args)
    except (ops.InvalidLevelError, ops.InvalidIndexError, conn.PoleError,
            tr.PathError, tr.DivergenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
