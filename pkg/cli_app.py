# cli_app.py
"""
Command-line front end.

    python cli_app.py con fixtures/n5.json
    python cli_app.py fdmax fixtures/vee_algebra_c.json --format json
    python cli_app.py realize fixtures/n5.json fixtures/poset_k3.json --out out.json
    python cli_app.py verify out.json fixtures/poset_k3.json

Exit codes: 0 for any computed verdict (negative ones included), 1 for bad
input or a violated precondition, 2 when a search guard is exceeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, ValidationError

import tuning_knobs as cfg
from algebra_core import (
    AlgebraFile,
    FiniteAlgebra,
    GuardExceeded,
    InvalidAlgebra,
    PreconditionError,
    RealizationError,
    algebra_to_json,
    read_algebra_file,
    validate_algebra,
)
from compatibility import (
    build_family,
    check_xyz,
    family_to_json,
    load_family,
    load_relation,
    verify_compatible,
)
from congruence import (
    classify,
    congruence_lattice,
    meet_irreducible_congruences,
    monolith,
    shape_tag,
)
from diagram_limit import (
    Realization,
    check_admissible,
    check_star,
    limit,
    load_diagram,
    realize_chain,
    realize_vshape,
)
from distributive_lattice import (
    FiniteLattice,
    check_doublestar,
    lattice_isomorphic,
    load_poset,
    materialize,
    upset_chain_height,
)
from variety_analysis import (
    ChainVerdict,
    NotAVVariety,
    SIInventory,
    WitnessPair,
    decide_chain_fdmax,
    decide_fdmax,
    enumerate_si_many,
)

log = logging.getLogger("cli_app")


# ----------------------------
# Knob overrides (apply for one command, then restore)
# ----------------------------
_CFG_BASELINE = {
    "MAX_LIMIT_SIZE": cfg.MAX_LIMIT_SIZE,
    "MAX_PRODUCT_SIZE": cfg.MAX_PRODUCT_SIZE,
    "MAX_CONGRUENCES": cfg.MAX_CONGRUENCES,
}
_CFG_LOCK = threading.Lock()


def _apply_cfg_from_args(args: argparse.Namespace) -> None:
    if getattr(args, "guard_size", None) is not None:
        cfg.MAX_LIMIT_SIZE = args.guard_size
        cfg.MAX_PRODUCT_SIZE = args.guard_size
    if getattr(args, "guard_congruences", None) is not None:
        cfg.MAX_CONGRUENCES = args.guard_congruences


def _restore_cfg_baseline() -> None:
    for name, value in _CFG_BASELINE.items():
        setattr(cfg, name, value)


# ----------------------------
# Report models
# ----------------------------
class CongruenceRow(BaseModel):
    index: int
    blocks: str
    num_blocks: int
    meet_irreducible: bool


class ConReport(BaseModel):
    algebra: str
    size: int
    shape: str
    congruences: List[CongruenceRow]
    covers: List[Tuple[str, str]]


class ClassifyReport(BaseModel):
    algebra: str
    classification: str
    monolith: Optional[str] = None


class InventoryMember(BaseModel):
    name: str
    size: int
    kind: str
    con_shape: str


class InventoryReport(BaseModel):
    generator: str
    v_variety: bool
    counts: Dict[str, int]
    members: List[InventoryMember]


class WitnessModel(BaseModel):
    C: str
    B: str
    h0: Dict[str, str]
    h1: Dict[str, str]
    E: List[Tuple[str, str]]


class VerdictReport(BaseModel):
    maximal: bool
    criterion: str = "xyz"
    reason: str
    inventory: InventoryReport
    witness: Optional[WitnessModel] = None
    pairs_checked: int = 0
    chain_length: Optional[int] = None


class LimitReport(BaseModel):
    points: List[str]
    size: int
    elements: List[str]
    admissible_i: bool
    admissible_ii: bool
    missing_values: List[Tuple[str, str]]
    inseparable: List[Tuple[str, str]]
    star_ok: bool
    star_failures: List[Dict[str, Any]]


class VerifyReport(BaseModel):
    algebra: str
    poset_size: int
    lattice_size: int
    con_size: int
    con_shape: str
    isomorphic: bool


class XYZExport(BaseModel):
    status: str
    failing: Optional[Tuple[str, str]] = None
    witnesses: Dict[str, Tuple[str, str, str]]
    family_ok: Optional[bool] = None
    family_counterexample: Optional[str] = None


class RealizeReport(BaseModel):
    generator: str
    construction: str
    size: int
    con_size: int
    con_shape: str
    out: Optional[str] = None


# ----------------------------
# Helpers
# ----------------------------
def _table(rows: List[Dict[str, Any]], columns: Sequence[str]) -> str:
    if not rows:
        return "(none)"
    return pd.DataFrame(rows, columns=list(columns)).to_string(index=False)


def _emit(args: argparse.Namespace, report: BaseModel, text: str) -> None:
    if args.format == "json":
        print(report.model_dump_json(indent=cfg.JSON_INDENT))
    else:
        print(text)


def _load(path: str) -> Tuple[FiniteAlgebra, AlgebraFile]:
    spec = read_algebra_file(path)
    return validate_algebra(spec), spec


def _has_lattice_reduct(A: FiniteAlgebra) -> bool:
    try:
        FiniteLattice.from_algebra(A)
    except PreconditionError:
        return False
    return True


def _require_cd(args: argparse.Namespace, algebras: Sequence[Tuple[FiniteAlgebra, AlgebraFile]]) -> None:
    for A, spec in algebras:
        if not (args.assume_cd or spec.congruence_distributive or _has_lattice_reduct(A)):
            raise PreconditionError(
                f"{A.name}: congruence distributivity is not asserted "
                "(set congruence_distributive in the file or pass --assume-cd)"
            )


def _inventory_report(inv: SIInventory) -> InventoryReport:
    members = []
    for kind, group in (("simple", inv.simples), ("V", inv.v_algebras), ("other", inv.others)):
        for A in group:
            members.append(InventoryMember(name=A.name, size=A.size, kind=kind, con_shape=shape_tag(congruence_lattice(A))))
    return InventoryReport(
        generator=inv.generator.name,
        v_variety=not inv.others,
        counts={"simple": len(inv.simples), "V": len(inv.v_algebras), "other": len(inv.others)},
        members=members,
    )


def _inventory_text(rep: InventoryReport) -> str:
    head = f"generator: {rep.generator}\nV-variety: {rep.v_variety}\n"
    return head + _table([m.model_dump() for m in rep.members], ["name", "size", "kind", "con_shape"])


def _witness_model(wp: WitnessPair) -> WitnessModel:
    return WitnessModel(
        C=wp.C.name,
        B=wp.B.name,
        h0=wp.h0.as_labels(),
        h1=wp.h1.as_labels(),
        E=wp.E.label_pairs() if wp.E is not None else [],
    )


def _write_json(path: str, payload: Dict[str, Any]) -> None:
    Path(path).write_text(json.dumps(payload, indent=cfg.JSON_INDENT) + "\n")


# ----------------------------
# Verbs
# ----------------------------
def cmd_con(args: argparse.Namespace) -> int:
    A, _ = _load(args.algebra)
    L = congruence_lattice(A)
    irreducible = set(meet_irreducible_congruences(L))
    rows = [
        CongruenceRow(index=i, blocks=t.to_text(), num_blocks=t.num_blocks, meet_irreducible=t in irreducible)
        for i, t in enumerate(L.congruences)
    ]
    report = ConReport(
        algebra=A.name,
        size=len(L),
        shape=shape_tag(L),
        congruences=rows,
        covers=[(lo.to_text(), hi.to_text()) for lo, hi in L.covers()],
    )
    text = (
        f"Con({A.name}): {report.size} congruences, shape {report.shape}\n"
        + _table([r.model_dump() for r in rows], ["index", "blocks", "num_blocks", "meet_irreducible"])
        + "\ncovers:\n"
        + "\n".join(f"  {lo} < {hi}" for lo, hi in report.covers)
    )
    _emit(args, report, text)
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    A, _ = _load(args.algebra)
    kind = classify(A)
    mono = monolith(A)
    report = ClassifyReport(algebra=A.name, classification=kind.value, monolith=mono.to_text() if mono else None)
    text = f"{A.name}: {kind.value}" + (f"\nmonolith: {report.monolith}" if mono else "")
    _emit(args, report, text)
    return 0


def cmd_si(args: argparse.Namespace) -> int:
    loaded = [_load(p) for p in args.algebras]
    _require_cd(args, loaded)
    inv = enumerate_si_many([A for A, _ in loaded])
    report = _inventory_report(inv)
    _emit(args, report, _inventory_text(report))
    return 0


def _chain_fallback(G: FiniteAlgebra, error: NotAVVariety) -> ChainVerdict:
    chain = decide_chain_fdmax(G)
    if not chain.applicable:
        raise error
    log.info("%s: not a V-variety, using the chain criterion (n = %d)", G.name, chain.n)
    return chain


def cmd_fdmax(args: argparse.Namespace) -> int:
    loaded = _load(args.algebra)
    _require_cd(args, [loaded])
    G = loaded[0]
    references = [_load(path)[0] for path in args.simple]
    try:
        verdict = decide_fdmax(G, references=references)
    except NotAVVariety as e:
        chain = _chain_fallback(G, e)
        report = VerdictReport(
            maximal=chain.maximal,
            criterion="chain",
            reason=chain.reason,
            inventory=_inventory_report(chain.inventory),
            chain_length=chain.n,
        )
        text = (
            f"maximal: {chain.maximal}\ncriterion: chain (n = {chain.n})\nreason: {chain.reason}\n"
            + _inventory_text(report.inventory)
        )
        _emit(args, report, text)
        return 0
    report = VerdictReport(
        maximal=verdict.maximal,
        reason=verdict.reason,
        inventory=_inventory_report(verdict.inventory),
        witness=_witness_model(verdict.witness) if verdict.witness else None,
        pairs_checked=len(verdict.pair_reports),
    )
    text = f"maximal: {verdict.maximal}\nreason: {verdict.reason}\n" + _inventory_text(report.inventory)
    if report.witness:
        E = ", ".join(f"({a},{b})" for a, b in report.witness.E)
        text += f"\nwitness: {report.witness.C} -> {report.witness.B}, E = {{{E}}}"
    _emit(args, report, text)
    return 0


def _realize_in_variety(args: argparse.Namespace, G: FiniteAlgebra, P) -> Tuple[Realization, str]:
    d_order = args.d_order.split(",") if args.d_order else None
    try:
        verdict = decide_fdmax(G)
    except NotAVVariety as e:
        chain = _chain_fallback(G, e)
        return realize_chain(chain.longest, P), "chain"
    if not verdict.maximal:
        raise PreconditionError(f"{G.name} does not generate an FD-maximal V-variety: {verdict.reason}")
    if verdict.witness is None:
        return realize_chain(verdict.inventory.simples[0], P), "chain"
    split = check_doublestar(P)
    if not split.holds:
        raise PreconditionError(f"double-star condition (**) fails: {split.reason}")
    family = build_family(verdict.witness.E, max(1, len(split.D)))
    return realize_vshape(verdict.witness, family, P, d_order=d_order), "vshape"


def cmd_realize(args: argparse.Namespace) -> int:
    loaded = _load(args.generator)
    G = loaded[0]
    P = load_poset(args.poset)
    con = congruence_lattice(G)
    height = upset_chain_height(P)

    if con.lattice.is_chain() and height is not None and height <= len(con) - 1:
        result, construction = realize_chain(G, P), "chain"
    else:
        _require_cd(args, [loaded])
        result, construction = _realize_in_variety(args, G, P)

    A = result.algebra
    payload = algebra_to_json(A)
    if not args.out:
        print(json.dumps(payload, indent=cfg.JSON_INDENT))
        return 0
    _write_json(args.out, payload)
    L = congruence_lattice(A)
    report = RealizeReport(
        generator=G.name, construction=construction, size=A.size, con_size=len(L), con_shape=shape_tag(L), out=args.out
    )
    text = (
        f"realized by the {construction} construction: {A.size} elements, "
        f"Con has {len(L)} elements ({report.con_shape})\nwritten to {args.out}"
    )
    _emit(args, report, text)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    A, _ = _load(args.algebra)
    P = load_poset(args.poset)
    target = materialize(P)
    con = congruence_lattice(A)
    same = lattice_isomorphic(con, target)
    report = VerifyReport(
        algebra=A.name,
        poset_size=P.size,
        lattice_size=target.lattice.size,
        con_size=len(con),
        con_shape=shape_tag(con),
        isomorphic=same,
    )
    verdict = "isomorphic" if same else "NOT isomorphic"
    text = f"Con({A.name}) ({len(con)} elements) is {verdict} to the lattice of the poset ({target.lattice.size} elements)"
    _emit(args, report, text)
    return 0


def cmd_limit(args: argparse.Namespace) -> int:
    D = load_diagram(args.diagram)
    L = limit(D)
    adm = check_admissible(L)
    star = check_star(D)
    if args.out:
        _write_json(args.out, algebra_to_json(L.algebra))
    report = LimitReport(
        points=list(D.index_poset.elements),
        size=L.size,
        elements=list(L.algebra.elements),
        admissible_i=adm.cond_i,
        admissible_ii=adm.cond_ii,
        missing_values=adm.missing_values,
        inseparable=adm.inseparable,
        star_ok=star.ok,
        star_failures=[{"point": e.point, "missing": e.missing, "extra": e.extra} for e in star.failures()],
    )
    lines = [
        f"limit over {len(report.points)} points: {report.size} elements",
        f"admissibility (i): {adm.cond_i}" + ("" if adm.cond_i else f"  missing {adm.missing_values}"),
        f"admissibility (ii): {adm.cond_ii}" + ("" if adm.cond_ii else f"  inseparable {adm.inseparable}"),
        f"star condition (*): {star.ok}",
    ]
    for e in star.failures():
        lines.append(f"  at {e.point}: missing {e.missing} extra {e.extra}")
    _emit(args, report, "\n".join(lines))
    return 0


def cmd_compat_check(args: argparse.Namespace) -> int:
    E = load_relation(args.relation)
    xyz = check_xyz(E)
    report = XYZExport(
        status=xyz.status,
        failing=(E.base[xyz.failing[0]], E.base[xyz.failing[1]]) if xyz.failing else None,
        witnesses={
            f"({E.base[a]},{E.base[b]})": tuple(E.base[v] for v in w) for (a, b), w in sorted(xyz.witnesses.items())
        },
    )
    text = f"xyz condition: {xyz.status}"
    if report.failing:
        text += f"\nno witness for {report.failing}"
    if args.family:
        F = load_family(args.family)
        check = verify_compatible(F, E, strong=True)
        report.family_ok = check.ok
        report.family_counterexample = check.counterexample
        text += f"\nfamily strongly E-compatible: {check.ok}" + (f" ({check.counterexample})" if not check.ok else "")
    _emit(args, report, text)
    return 0


def cmd_compat_build(args: argparse.Namespace) -> int:
    E = load_relation(args.relation)
    F = build_family(E, args.k)
    payload = family_to_json(F)
    if args.out:
        _write_json(args.out, payload)
        print(f"family of {F.size} functions on {len(F.domain)} points written to {args.out}")
    else:
        print(json.dumps(payload, indent=cfg.JSON_INDENT))
    return 0


# ----------------------------
# Parser and entry point
# ----------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=cfg.OUTPUT_FORMATS, default=cfg.DEFAULT_OUTPUT_FORMAT)
    common.add_argument("--guard-size", type=int, default=None, help="Limit and product size guard.")
    common.add_argument("--guard-congruences", type=int, default=None, help="Congruence count guard.")
    common.add_argument("--assume-cd", action="store_true", help="Assert the generated variety is congruence distributive.")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(description="Congruence lattices of finite algebras and FD-maximality of V-varieties")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("con", parents=[common], help="List the congruence lattice.")
    p.add_argument("algebra")
    p.set_defaults(func=cmd_con)

    p = sub.add_parser("classify", parents=[common], help="Simple / SI / not SI.")
    p.add_argument("algebra")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("si", parents=[common], help="SI members of the generated variety.")
    p.add_argument("algebras", nargs="+")
    p.set_defaults(func=cmd_si)

    p = sub.add_parser("fdmax", parents=[common], help="Decide congruence FD-maximality.")
    p.add_argument("algebra")
    p.add_argument(
        "--simple",
        action="append",
        default=[],
        help="Simple algebra file whose labels name a failing pair (repeatable).",
    )
    p.set_defaults(func=cmd_fdmax)

    p = sub.add_parser("realize", parents=[common], help="Build an algebra whose Con matches a poset's lattice.")
    p.add_argument("generator")
    p.add_argument("poset")
    p.add_argument("--out", default=None)
    p.add_argument("--d-order", default=None, help="Comma-separated maximal elements, overriding the family order.")
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("verify", parents=[common], help="Compare Con(algebra) with a poset's lattice.")
    p.add_argument("algebra")
    p.add_argument("poset")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compat-check", parents=[common], help="Check the xyz condition of a relation.")
    p.add_argument("relation")
    p.add_argument("--family", default=None)
    p.set_defaults(func=cmd_compat_check)

    p = sub.add_parser("compat-build", parents=[common], help="Build a strongly E-compatible family.")
    p.add_argument("relation")
    p.add_argument("k", type=int)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compat_build)

    p = sub.add_parser("limit", parents=[common], help="Limit of a diagram file with its checks.")
    p.add_argument("diagram")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_limit)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    with _CFG_LOCK:
        _apply_cfg_from_args(args)
        try:
            return args.func(args)
        except GuardExceeded as e:
            print(f"guard exceeded: {e}", file=sys.stderr)
            return 2
        except InvalidAlgebra as e:
            print("invalid algebra:", file=sys.stderr)
            for v in e.violations:
                print(f"  - {v}", file=sys.stderr)
            return 1
        except (PreconditionError, RealizationError, ValidationError, json.JSONDecodeError) as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
        except OSError as e:
            print(f"error: cannot read {e.filename}: {e.strerror}", file=sys.stderr)
            return 1
        finally:
            _restore_cfg_baseline()


if __name__ == "__main__":
    raise SystemExit(main())
