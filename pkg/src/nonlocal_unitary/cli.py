"""``nlu``: command-line front end.

Every command prints a human-readable report, a ``---`` separator line and
a JSON block with the same facts. Exit codes: 0 success, 2 unparsable
input, 3 contract violation, 4 theorem anomaly.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .controlled import (
    check_controlled,
    extract_controlled_form,
    finest_block_structure,
    independent_group_count,
)
from .equivalence import SLWitness, sl_to_lu
from .errors import ContractViolation, InternalContractViolation, MatrixFileError, TheoremViolationReport
from .fixtures import FIXTURES, get_fixture
from .linalg import Tolerance
from .matrixio import MatrixFile, loads_kronecker_sum, loads_state, read_matrix_file, write_matrix_file
from .protocol import (
    enumerate_branches,
    implement_schmidt_rank3,
    random_state,
    simulate_controlled_protocol,
    simulate_teleport_protocol,
)
from .ranks import check_rank_inequality, random_kronecker_sum, verify_rank3_unitary_equality
from .sampling import as_rng
from .schmidt import BipartiteUnitary, reconstruction_residual, schmidt_decompose, schmidt_rank

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONTRACT = 3
EXIT_ANOMALY = 4

SEPARATOR = "---"


def _emit(lines, payload, out) -> None:
    for line in lines:
        print(line, file=out)
    print(SEPARATOR, file=out)
    print(json.dumps(payload, indent=2, sort_keys=True), file=out)


def _tol(args) -> Tolerance:
    return Tolerance(unitarity_tol=args.unitarity_tol, rank_rel_tol=args.rank_tol, commute_tol=args.commute_tol)


def _load_unitary(path, tol) -> tuple[BipartiteUnitary, MatrixFile]:
    mf = read_matrix_file(path)
    return BipartiteUnitary(mf.d_A, mf.d_B, mf.matrix, tol), mf


def _local(path) -> np.ndarray:
    mf = read_matrix_file(path)
    if mf.d_B != 1:
        raise MatrixFileError(f"{path}: local operators must have d_B = 1")
    return np.array(mf.matrix)


def _fmt_pairs(values) -> list:
    return [[float(np.real(z)), float(np.imag(z))] for z in np.asarray(values).reshape(-1)]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_schmidt(args, out) -> int:
    tol = _tol(args)
    U, mf = _load_unitary(args.file, tol)
    dec = schmidt_decompose(U, tol=tol)
    res = reconstruction_residual(dec, U.matrix)
    if args.write_factors:
        d = Path(args.write_factors)
        d.mkdir(parents=True, exist_ok=True)
        for j, (a, b) in enumerate(zip(dec.a_ops, dec.b_ops)):
            write_matrix_file(d / f"a_{j}.json", MatrixFile(U.d_A, 1, a, f"a_{j}"))
            write_matrix_file(d / f"b_{j}.json", MatrixFile(U.d_B, 1, b, f"b_{j}"))
    coeffs = [float(c) for c in dec.coefficients]
    lines = [
        f"file: {args.file} ({mf.name or 'unnamed'}, {U.d_A}x{U.d_B})",
        f"Schmidt rank: {dec.rank}",
        "coefficients: " + ", ".join(f"{c:.12g}" for c in coeffs),
        f"reconstruction residual: {res:.3e}",
    ]
    payload = {"d_A": U.d_A, "d_B": U.d_B, "schmidt_rank": dec.rank, "coefficients": coeffs, "residual": res}
    _emit(lines, payload, out)
    return EXIT_OK


def _detect_side(U, side, tol, seed) -> dict:
    chk = check_controlled(U, side, tol)
    info = {"controlled": chk.is_controlled, "criterion_residual": float(chk.residual)}
    if chk.is_controlled:
        form = extract_controlled_form(U, side, tol, seed)
        info["groups"] = form.n_groups
        info["independent_groups"] = independent_group_count(form, tol)
        info["extraction_residual"] = float(form.residual)
    bs = finest_block_structure(U, side, tol, seed)
    info["bcu_blocks"] = None if bs is None else list(bs.block_sizes)
    return info


def cmd_detect(args, out) -> int:
    tol = _tol(args)
    U, mf = _load_unitary(args.file, tol)
    sides = ("A", "B") if args.side == "both" else (args.side,)
    payload = {"d_A": U.d_A, "d_B": U.d_B, "schmidt_rank": schmidt_rank(U, tol=tol), "sides": {}}
    lines = [f"file: {args.file} ({mf.name or 'unnamed'}, {U.d_A}x{U.d_B})", f"Schmidt rank: {payload['schmidt_rank']}"]
    for s in sides:
        info = _detect_side(U, s, tol, args.seed)
        payload["sides"][s] = info
        verdict = f"controlled ({info['groups']} groups)" if info["controlled"] else "not controlled"
        blocks = "none" if info["bcu_blocks"] is None else "(" + ", ".join(map(str, info["bcu_blocks"])) + ")"
        lines.append(f"side {s}: {verdict}; BCU blocks: {blocks}")
    _emit(lines, payload, out)
    return EXIT_OK


def cmd_decompose(args, out) -> int:
    tol = _tol(args)
    U, mf = _load_unitary(args.file, tol)
    form = extract_controlled_form(U, args.side, tol, args.seed)
    recon = float(np.linalg.norm(form.reconstruct() - U.matrix) / np.linalg.norm(U.matrix))
    groups = [list(map(int, g.indices)) for g in form.groups]
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        write_matrix_file(d / "q.json", MatrixFile(form.d_ctrl, 1, form.q, "q"))
        write_matrix_file(d / "r.json", MatrixFile(form.d_ctrl, 1, form.r, "r"))
        for g, grp in enumerate(form.groups):
            write_matrix_file(d / f"v_{g}.json", MatrixFile(form.d_target, 1, grp.v, f"v_{g}", f"indices {groups[g]}"))
    lines = [
        f"file: {args.file} ({mf.name or 'unnamed'}, {U.d_A}x{U.d_B})",
        f"controlled from {form.side} with {form.n_groups} groups",
    ]
    lines += [f"  group {g}: indices {idx}" for g, idx in enumerate(groups)]
    lines.append(f"reconstruction residual: {recon:.3e}")
    payload = {"side": form.side, "n_groups": form.n_groups, "groups": groups, "residual": recon}
    _emit(lines, payload, out)
    return EXIT_OK


def cmd_sl2lu(args, out) -> int:
    tol = _tol(args)
    U, _ = _load_unitary(args.u_file, tol)
    V, _ = _load_unitary(args.v_file, tol)
    if len(args.s) != len(args.t):
        raise MatrixFileError("need as many --s files as --t files")
    w = SLWitness([_local(p) for p in args.s], [_local(p) for p in args.t])
    lu = sl_to_lu(U.matrix, V.matrix, w, tol)
    identity = [bool(np.array_equal(q, np.eye(q.shape[0])) and np.array_equal(r, np.eye(r.shape[0])))
                for q, r in zip(lu.q_ops, lu.r_ops)]
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        for i, (q, r) in enumerate(zip(lu.q_ops, lu.r_ops)):
            write_matrix_file(d / f"q_{i}.json", MatrixFile(q.shape[0], 1, q, f"q_{i}"))
            write_matrix_file(d / f"r_{i}.json", MatrixFile(r.shape[0], 1, r, f"r_{i}"))
    lines = [
        f"parties: {w.parties}, dims {list(w.dims)}",
        f"residual ||U - (x)q V (x)r||_F: {lu.residual:.3e}",
        f"internal identity residual: {lu.internal_residual:.3e}",
    ]
    lines += [f"  party {i}: {'identity' if flag else 'unitary'}" for i, flag in enumerate(identity)]
    payload = {
        "parties": w.parties,
        "dims": list(w.dims),
        "residual": float(lu.residual),
        "internal_residual": float(lu.internal_residual),
        "identity_parties": identity,
    }
    _emit(lines, payload, out)
    return EXIT_OK


def _protocol_input(args, U):
    if args.input == "random":
        return random_state(("A", "B", "R"), (U.d_A, U.d_B, U.dim), as_rng(args.seed))
    return loads_state(Path(args.input).read_text(encoding="utf-8"))


def _cheapest_controlled(U, tol, seed, side=None):
    forms = []
    for s in (side,) if side else ("A", "B"):
        if check_controlled(U, s, tol).is_controlled:
            forms.append(extract_controlled_form(U, s, tol, seed))
    if not forms:
        raise ContractViolation("gate is not controlled from the requested side(s)")
    return min(forms, key=lambda f: f.n_groups)


def cmd_protocol(args, out) -> int:
    tol = _tol(args)
    U, mf = _load_unitary(args.file, tol)
    state = _protocol_input(args, U)
    sr = schmidt_rank(U, tol=tol)
    if args.protocol == "teleport":
        result = simulate_teleport_protocol(U, state, args.seed)
        kind, obj = "teleport_twice", U
    elif args.protocol == "controlled":
        form = _cheapest_controlled(U, tol, args.seed, args.side)
        result = simulate_controlled_protocol(form, state, args.seed, tol=tol)
        kind, obj = f"controlled_{form.side}", form
    elif sr == 3 and U.d_A in (2, 3) and U.d_B >= U.d_A:
        result = implement_schmidt_rank3(U, state, tol, args.seed)
        kind = result[1].protocol
        obj = U if kind == "teleport_twice" else _cheapest_controlled(U, tol, args.seed, kind[-1])
    else:
        try:
            form = _cheapest_controlled(U, tol, args.seed)
        except ContractViolation:
            form = None
        if form is not None and form.n_groups <= U.d_A ** 2:
            result = simulate_controlled_protocol(form, state, args.seed, tol=tol)
            kind, obj = f"controlled_{form.side}", form
        else:
            result = simulate_teleport_protocol(U, state, args.seed)
            kind, obj = "teleport_twice", U
    _, tr = result
    payload = tr.to_dict()
    lines = [
        f"file: {args.file} ({mf.name or 'unnamed'}, {U.d_A}x{U.d_B}), Schmidt rank {sr}",
        f"protocol: {tr.protocol}",
        f"resource rank: {tr.resource_rank} ({tr.ebits:.12g} ebits)",
    ]
    lines += [f"  round {i + 1}: {r.party} measures -> {r.message}; {r.correction}" for i, r in enumerate(tr.rounds)]
    lines.append(f"process fidelity: {tr.process_fidelity:.12f}")
    if args.all_branches:
        branches = enumerate_branches(kind, obj, state, seed=args.seed)
        worst = min(t.process_fidelity for _, t in branches)
        payload["branches"] = {"count": len(branches), "min_fidelity": worst}
        lines.append(f"branches checked: {len(branches)}, min fidelity {worst:.12f}")
    _emit(lines, payload, out)
    if tr.process_fidelity < 1 - 1e-9:
        print(f"error: protocol fidelity {tr.process_fidelity!r} below 1 - 1e-9", file=sys.stderr)
        return EXIT_ANOMALY
    return EXIT_OK


def cmd_rankcheck(args, out) -> int:
    tol = _tol(args)
    lines, records = [], []
    anomaly = False
    if args.unitary:
        for path in args.unitary:
            U, _ = _load_unitary(path, tol)
            rep = verify_rank3_unitary_equality(U, tol, args.seed, experimental=args.experimental)
            lines.append(f"{path}: rank(U^Gamma) = {rep.rank_pt}, rank(U) = {rep.rank_u}, side {rep.side}")
            records.append({"source": str(path), **rep.to_dict()})
    instances = [(str(p), loads_kronecker_sum(Path(p).read_text(encoding="utf-8"))) for p in args.files]
    if args.random is not None:
        rng = as_rng(args.seed)
        instances += [(f"random[{i}]", random_kronecker_sum(args.random, rng)) for i in range(args.trials)]
    flagged = []
    for src, ks in instances:
        rep = check_rank_inequality(ks, tol)
        rec = {"source": src, **rep.to_dict()}
        bad = not rep.holds or not rep.symmetric_ok
        if bad:
            flagged.append(rec)
            # proven cases signal an anomaly; larger K is a conjecture probe
            anomaly = anomaly or rep.K <= 2 or not rep.symmetric_ok
        if bad or args.random is None or args.verbose:
            tag = "FLAGGED" if bad else "holds"
            lines.append(f"{src}: K={rep.K} lhs={rep.lhs_rank} rhs={rep.rhs_rank} {tag}")
            records.append(rec)
    n = len(instances)
    if n:
        lines.append(f"{n - len(flagged)}/{n} Kronecker-sum instances satisfy the inequality")
    payload = {"instances": n, "flagged": flagged, "records": records}
    _emit(lines, payload, out)
    return EXIT_ANOMALY if anomaly else EXIT_OK


def cmd_fixtures(args, out) -> int:
    if args.emit:
        name, directory = args.emit
        fx = get_fixture(name)
        U = fx.builder()
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"{name}.json"
        write_matrix_file(path, MatrixFile(U.d_A, U.d_B, U.matrix, fx.name, fx.description))
        _emit([f"wrote {path}"], {"name": name, "path": str(path)}, out)
        return EXIT_OK
    lines, payload = [], {}
    for name, fx in FIXTURES.items():
        U = fx.builder()
        lines.append(f"{name:18s} {U.d_A}x{U.d_B}  {fx.description}")
        payload[name] = {"d_A": U.d_A, "d_B": U.d_B, "description": fx.description, "expected": fx.expected}
    _emit(lines, payload, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlu", description="Structure analysis of bipartite unitary gates.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rank-tol", type=float, default=1e-9, help="relative singular-value cut")
    common.add_argument("--unitarity-tol", type=float, default=1e-9)
    common.add_argument("--commute-tol", type=float, default=1e-9)
    common.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("schmidt", parents=[common], help="operator Schmidt decomposition")
    s.add_argument("file")
    s.add_argument("--write-factors", metavar="DIR")
    s.set_defaults(func=cmd_schmidt)

    s = sub.add_parser("detect", parents=[common], help="controlled / block-controlled verdicts")
    s.add_argument("file")
    s.add_argument("--side", choices=("A", "B", "both"), default="both")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("decompose", parents=[common], help="extract a controlled form")
    s.add_argument("file")
    s.add_argument("--side", choices=("A", "B"), default="A")
    s.add_argument("--out", metavar="DIR")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("sl2lu", parents=[common], help="SL witness to local unitaries")
    s.add_argument("u_file")
    s.add_argument("v_file")
    s.add_argument("--s", nargs="+", required=True, metavar="FILE")
    s.add_argument("--t", nargs="+", required=True, metavar="FILE")
    s.add_argument("--out", metavar="DIR")
    s.set_defaults(func=cmd_sl2lu)

    s = sub.add_parser("protocol", parents=[common], help="simulate an LOCC implementation")
    s.add_argument("file")
    s.add_argument("--input", default="random", help="'random' or a state file")
    s.add_argument("--protocol", choices=("auto", "teleport", "controlled"), default="auto")
    s.add_argument("--side", choices=("A", "B"))
    s.add_argument("--all-branches", action="store_true")
    s.set_defaults(func=cmd_protocol)

    s = sub.add_parser("rankcheck", parents=[common], help="Kronecker-sum rank inequality")
    s.add_argument("files", nargs="*")
    s.add_argument("--random", type=int, metavar="K")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--unitary", nargs="+", metavar="FILE")
    s.add_argument("--experimental", action="store_true", help="allow d_A > 3 (report only)")
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(func=cmd_rankcheck)

    s = sub.add_parser("fixtures", help="list or write the fixture gallery")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--list", action="store_true")
    g.add_argument("--emit", nargs=2, metavar=("NAME", "DIR"))
    s.set_defaults(func=cmd_fixtures)
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except (MatrixFileError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ContractViolation as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (TheoremViolationReport, InternalContractViolation) as exc:
        print(f"anomaly: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ANOMALY


if __name__ == "__main__":
    sys.exit(main())
