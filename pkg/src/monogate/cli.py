"""Command-line front end: file I/O, configuration and reports over all
modules.

Subcommands: gate, paths, fuchsian, synth, kz, universality, pipeline.
Reports are JSON payloads embedding the resolved configuration; they are
bit-identical across runs for a fixed seed.  Exit codes: 0 success, 1 input
validation, 2 numerical failure (divisor contact, non-convergence), 3
verification deviation above tolerance.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from . import fuchsian, kz, lappo_danilevski as ld, paths, universality
from .gate_core import parse_gate_name
from .matrices import (
    complex_to_json,
    matrix_from_json,
    matrix_to_json,
    random_hermitian,
    unitarity_defect,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on bad flags; input errors are 1 here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_INPUT) from ValueError(message)


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise ValueError(f"cannot parse complex number {text!r}") from exc


def _threads() -> int | None:
    raw = os.environ.get("MG_NUM_THREADS")
    if raw is None:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"MG_NUM_THREADS must be an integer, got {raw!r}")


def _config(args, keys) -> dict:
    cfg = {k: getattr(args, k) for k in keys if hasattr(args, k)}
    cfg["threads"] = _threads()
    return cfg


def _validate_args(args) -> None:
    for key in ("tol", "verify_tol", "relation_tol", "eps", "radius"):
        value = getattr(args, key, None)
        if value is not None and value <= 0:
            raise ValueError(f"--{key.replace('_', '-')} must be positive, got {value}")
    for key in ("order", "maxlen", "samples", "budget", "generators"):
        value = getattr(args, key, None)
        if value is not None and value < 1:
            raise ValueError(f"--{key.replace('_', '-')} must be >= 1, got {value}")


def _render_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}{k}:")
                lines.append(_render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                lines.append(_render_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {v}")
    else:
        lines.append(f"{pad}{obj}")
    return "\n".join(lines)


def _emit(report: dict, args) -> None:
    if getattr(args, "format", "json") == "text":
        payload = _render_text(report)
    else:
        payload = json.dumps(report, indent=2)
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(payload + "\n", encoding="utf-8")
        print(f"wrote {out}")
    else:
        print(payload)


def _load_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_gateset(args) -> universality.GateSet:
    if getattr(args, "names", None):
        gates = [parse_gate_name(n) for n in args.names.split(",")]
        return universality.GateSet(
            tuple(g.matrix for g in gates), tuple(args.names.split(","))
        )
    if not getattr(args, "gates", None):
        raise ValueError("provide --gates FILE or --names LIST")
    obj = _load_json(args.gates)
    mats, labels = [], []
    for entry in obj["gates"]:
        mats.append(matrix_from_json(entry["matrix"]))
        labels.append(entry.get("label", f"g{len(labels)+1}"))
    return universality.GateSet(tuple(mats), tuple(labels))


# ---------------------------------------------------------------------------
# Subcommand handlers.
# ---------------------------------------------------------------------------

def _cmd_gate(args) -> int:
    gate = parse_gate_name(args.name)
    report = {
        "command": "gate",
        "config": _config(args, ("name", "out", "format")),
        "qubits": gate.qubits,
        "unitarity_defect": unitarity_defect(gate.matrix),
        "matrix": matrix_to_json(gate.matrix),
    }
    _emit(report, args)
    return EXIT_OK


def _cmd_paths(args) -> int:
    if args.paths_command == "braid":
        path = paths.braid_generator_path(args.n, args.i)
        payload = paths.path_to_json(path)
    elif args.paths_command == "pure-braid":
        word = paths.pure_braid_word(args.n, args.i, args.j)
        path = paths.braid_word_path(args.n, word)
        payload = paths.path_to_json(path)
        payload["word"] = word
    elif args.paths_command == "loop":
        path = paths.generator_loop(
            _parse_complex(args.basepoint), _parse_complex(args.puncture), args.radius
        )
        payload = paths.path_to_json(path)
    else:  # loops: the standard generator system around several punctures
        punctures = [_parse_complex(p) for p in args.punctures]
        loops = fuchsian.x4_generator_loops(
            punctures, _parse_complex(args.basepoint), args.radius
        )
        payload = paths.loops_to_json(loops)
    report = {
        "command": f"paths {args.paths_command}",
        "config": _config(args, ("n", "i", "j", "basepoint", "puncture", "punctures", "radius", "out", "format")),
    }
    report.update(payload)
    _emit(report, args)
    return EXIT_OK


def _cmd_fuchsian(args) -> int:
    conn = fuchsian.connection_from_json(_load_json(args.conn))
    loops = paths.loops_from_json(_load_json(args.loops))
    rep = fuchsian.monodromy_representation(conn, loops, tol=args.tol)
    report = {
        "command": "fuchsian monodromy",
        "config": _config(args, ("conn", "loops", "tol", "out", "format")),
        "labels": list(rep.labels),
        "basepoint": [complex_to_json(z) for z in rep.basepoint],
        "matrices": [matrix_to_json(m) for m in rep.matrices],
        "deviations": {
            "product_defect": rep.product_defect(),
            "unitarity_defects": [unitarity_defect(m) for m in rep.matrices],
        },
    }
    _emit(report, args)
    return EXIT_OK


def _cmd_synth(args) -> int:
    targets = ld.family_from_json(_load_json(args.targets))
    loops = paths.loops_from_json(_load_json(args.loops))
    points = tuple(_parse_complex(p) for p in args.points)
    reference = None if args.reference in (None, "inf") else _parse_complex(args.reference)
    forms = ld.DifferenceForms(points, reference=reference)
    family = ld.synthesize(targets, forms, loops, args.order, tol=args.tol)
    report = {
        "command": "synth",
        "config": _config(
            args, ("targets", "loops", "points", "reference", "order", "lam", "tol", "verify", "verify_tol", "out", "format")
        ),
        "family": ld.connection_family_to_json(family),
        "radius_estimate": family.radius_estimate()
        if np.isfinite(family.radius_estimate())
        else None,
    }
    status = EXIT_OK
    if args.verify:
        verification = ld.verify_match(targets, family, args.lam, loops, tol=args.tol)
        report["deviations"] = verification.as_dict()
        if verification.max_deviation > args.verify_tol:
            report["verdict"] = "deviation-above-tolerance"
            status = EXIT_VERIFY
        else:
            report["verdict"] = "verified"
    _emit(report, args)
    return status


def _build_kz(args) -> tuple[kz.KZSystem, list[np.ndarray]]:
    modules = [kz.SpinModule(args.spin) for _ in range(args.n)]
    sys_ = kz.build_kz(modules, args.lam)
    mats = [kz.braid_matrix(sys_, i, tol=args.tol) for i in range(1, args.n)]
    return sys_, mats


def _cmd_kz(args) -> int:
    sys_, mats = _build_kz(args)
    if args.kz_command == "braid":
        out_mats, labels = mats, [f"sigma_{i}" for i in range(1, args.n)]
        radical = None
        if args.unitarize:
            res = kz.unitarize_kz(sys_, mats, tol=args.tol)
            out_mats = list(res.matrices)
            radical = res.radical_dim
        report = {
            "command": "kz braid",
            "config": _config(args, ("n", "spin", "lam", "tol", "unitarize", "out", "format")),
            "gates": [
                {"label": lab, "matrix": matrix_to_json(m)}
                for lab, m in zip(labels, out_mats)
            ],
        }
        if radical is not None:
            report["radical_dim"] = radical
        _emit(report, args)
        return EXIT_OK
    # kz verify
    relations = kz.verify_braid_relations(mats, args.n, tol=args.relation_tol)
    twist_devs = []
    conn = sys_.connection()
    for i in range(1, args.n):
        full = fuchsian.transport(conn, paths.braid_word_path(args.n, [i, i]), tol=args.tol)
        twist_devs.append(float(np.linalg.norm(mats[i - 1] @ mats[i - 1] - full)))
    res = kz.unitarize_kz(sys_, mats, tol=args.tol)
    report = {
        "command": "kz verify",
        "config": _config(args, ("n", "spin", "lam", "tol", "relation_tol", "out", "format")),
        "deviations": {
            "braid_relations": list(relations.braid_deviations),
            "far_commutation": list(relations.commutation_deviations),
            "half_twist_squared": twist_devs,
            "unitarized_defect": res.defect,
        },
        "radical_dim": res.radical_dim,
        "quotient_dim": res.matrices[0].shape[0],
    }
    worst = max([relations.max_deviation] + twist_devs)
    if worst > args.relation_tol or res.defect > 1e-8:
        report["verdict"] = "deviation-above-tolerance"
        _emit(report, args)
        return EXIT_VERIFY
    report["verdict"] = "verified"
    _emit(report, args)
    return EXIT_OK


def _cmd_universality(args) -> int:
    gs = _load_gateset(args)
    if args.universality_command == "screen":
        screen = universality.density_screen(gs, maxlen=args.maxlen, node_budget=args.budget)
        report = {
            "command": "universality screen",
            "config": _config(args, ("gates", "names", "maxlen", "budget", "out", "format")),
            "labels": list(gs.labels),
        }
        report.update(screen.as_dict())
        _emit(report, args)
        return EXIT_OK
    coverage = universality.epsilon_net_coverage(
        gs, args.maxlen, args.eps, args.samples, seed=args.seed, node_budget=args.budget
    )
    report = {
        "command": "universality coverage",
        "config": _config(args, ("gates", "names", "maxlen", "eps", "samples", "seed", "budget", "out", "format")),
        "labels": list(gs.labels),
    }
    report.update(coverage.as_dict())
    _emit(report, args)
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    """End-to-end: targets near identity -> synthesis -> forward verification
    -> density screen -> one verdict."""
    rng = np.random.default_rng(args.seed)
    m = args.generators
    punctures = tuple(float(k) for k in range(m))
    basepoint = (m - 1) / 2.0 - 1.5j
    loops = paths.puncture_loops(punctures, basepoint, args.radius)
    forms = ld.DifferenceForms(punctures, reference=None)
    if args.zero_targets:
        hams = [np.zeros((args.dim, args.dim)) for _ in range(m)]
    else:
        hams = [random_hermitian(args.dim, rng) for _ in range(m)]
    targets = ld.RepresentationFamily.exponential_targets(hams, args.order)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        family = ld.synthesize(targets, forms, loops, args.order, tol=args.tol)
        verification = ld.verify_match(targets, family, args.lam, loops, tol=args.tol)
    gates = [expm(2j * np.pi * args.lam * h) for h in hams]
    screen = universality.density_screen(
        universality.GateSet(tuple(gates)), maxlen=args.maxlen, node_budget=args.budget
    )
    zero = all(np.linalg.norm(h) == 0.0 for h in hams)
    if zero:
        verdict = "trivially-consistent"
        status = EXIT_OK
    elif verification.max_deviation <= args.verify_tol:
        verdict = "consistent"
        status = EXIT_OK
    else:
        verdict = "deviation-above-tolerance"
        status = EXIT_VERIFY
    report = {
        "command": "pipeline",
        "config": _config(
            args,
            ("seed", "generators", "dim", "order", "lam", "radius", "tol",
             "verify_tol", "maxlen", "budget", "zero_targets", "out", "format"),
        ),
        "deviations": verification.as_dict(),
        "screen": screen.as_dict(),
        "gates": [{"label": f"target_{j+1}", "matrix": matrix_to_json(g)} for j, g in enumerate(gates)],
        "verdict": verdict,
    }
    _emit(report, args)
    return status


# ---------------------------------------------------------------------------
# Argument wiring.
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--out", help="write the report to this file")
    p.add_argument("--format", choices=("json", "text"), default="json")


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="monogate", description=__doc__)
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gate", help="emit a named gate matrix")
    p.add_argument("--name", required=True, help="X, Y, Z, H, H_std, PHASE:<alpha>, CNOT, CCNOT")
    _add_common(p)
    p.set_defaults(func=_cmd_gate)

    p = sub.add_parser("paths", help="build contours")
    psub = p.add_subparsers(dest="paths_command", required=True)
    pb = psub.add_parser("braid", help="braid generator path")
    pb.add_argument("--n", type=int, required=True)
    pb.add_argument("--i", type=int, required=True)
    _add_common(pb)
    pp = psub.add_parser("pure-braid", help="expanded pure braid tau_ij")
    pp.add_argument("--n", type=int, required=True)
    pp.add_argument("--i", type=int, required=True)
    pp.add_argument("--j", type=int, required=True)
    _add_common(pp)
    pl = psub.add_parser("loop", help="puncture generator loop")
    pl.add_argument("--basepoint", required=True)
    pl.add_argument("--puncture", required=True)
    pl.add_argument("--radius", type=float, required=True)
    _add_common(pl)
    pls = psub.add_parser("loops", help="generator loops around several punctures")
    pls.add_argument("--punctures", nargs="+", required=True)
    pls.add_argument("--basepoint", required=True)
    pls.add_argument("--radius", type=float, required=True)
    _add_common(pls)
    p.set_defaults(func=_cmd_paths)

    p = sub.add_parser("fuchsian", help="monodromy of a logarithmic connection")
    fsub = p.add_subparsers(dest="fuchsian_command", required=True)
    fm = fsub.add_parser("monodromy")
    fm.add_argument("--conn", required=True)
    fm.add_argument("--loops", required=True)
    fm.add_argument("--tol", type=float, default=1e-10)
    _add_common(fm)
    p.set_defaults(func=_cmd_fuchsian)

    p = sub.add_parser("synth", help="Lappo-Danilevski synthesis")
    p.add_argument("--targets", required=True)
    p.add_argument("--loops", required=True)
    p.add_argument("--points", nargs="+", required=True, help="puncture per generator")
    p.add_argument("--reference", default="inf", help="reference puncture or 'inf'")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--verify-tol", type=float, default=1e-4)
    _add_common(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("kz", help="Knizhnik-Zamolodchikov braid gates")
    ksub = p.add_subparsers(dest="kz_command", required=True)
    kb = ksub.add_parser("braid")
    kb.add_argument("--n", type=int, required=True)
    kb.add_argument("--spin", type=float, default=0.5)
    kb.add_argument("--lambda", dest="lam", type=float, required=True)
    kb.add_argument("--tol", type=float, default=1e-10)
    kb.add_argument("--unitarize", action="store_true")
    _add_common(kb)
    kv = ksub.add_parser("verify")
    kv.add_argument("--n", type=int, required=True)
    kv.add_argument("--spin", type=float, default=0.5)
    kv.add_argument("--lambda", dest="lam", type=float, required=True)
    kv.add_argument("--tol", type=float, default=1e-10)
    kv.add_argument("--relation-tol", type=float, default=1e-6)
    _add_common(kv)
    p.set_defaults(func=_cmd_kz)

    p = sub.add_parser("universality", help="density screening")
    usub = p.add_subparsers(dest="universality_command", required=True)
    us = usub.add_parser("screen")
    us.add_argument("--gates")
    us.add_argument("--names", help="comma-separated gate names")
    us.add_argument("--maxlen", type=int, default=16)
    us.add_argument("--budget", type=int, default=20000)
    _add_common(us)
    uc = usub.add_parser("coverage")
    uc.add_argument("--gates")
    uc.add_argument("--names")
    uc.add_argument("--maxlen", type=int, default=12)
    uc.add_argument("--eps", type=float, default=0.5)
    uc.add_argument("--samples", type=int, default=200)
    uc.add_argument("--seed", type=int, default=7)
    uc.add_argument("--budget", type=int, default=200000)
    _add_common(uc)
    p.set_defaults(func=_cmd_universality)

    p = sub.add_parser("pipeline", help="targets -> synthesis -> verification -> screen")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--generators", type=int, default=2)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--radius", type=float, default=0.3)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--verify-tol", type=float, default=1e-4)
    p.add_argument("--maxlen", type=int, default=10)
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--zero-targets", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_pipeline)

    return root


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _validate_args(args)
        return args.func(args)
    except fuchsian.NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
