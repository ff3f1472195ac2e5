"""Command line entry point: ``slat <command> [options] CONFIG``.

Exit codes: 0 success, 1 semantic failure (invalid model, failed check,
numerical error), 2 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfg
from . import spectral as spc
from .euclid import ModelError, assemble
from .fingroup import grading_overlap, pauli_fierz_generation, product_law, assemble_C
from .identities import run_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
COMMANDS = ("validate", "spectrum", "hvz", "thresholds", "mourre", "algebra-verify")


class CommandFailed(Exception):
    def __init__(self, payload: dict):
        self.payload = payload
        super().__init__(payload.get("message", "failed"))


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"slat {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        c = sub.add_parser(name)
        c.add_argument("config", help="model config (JSON)")
        c.add_argument("--out", default="slat-out", help="output directory (default: slat-out)")
        if name in ("spectrum", "thresholds", "mourre"):
            c.add_argument("--eps", type=float, default=None,
                           help="isolation margin; default is 10x the grid refinement residual")
        if name == "spectrum":
            c.add_argument("--count", type=int, default=10, help="eigenvalues per subsystem")
        if name == "thresholds":
            c.add_argument("--lambda-min", type=float, default=None)
            c.add_argument("--lambda-max", type=float, default=None)
            c.add_argument("--lambda-count", type=int, default=401)
        if name == "mourre":
            c.add_argument("--lambda", dest="lam", type=float, required=True)
            c.add_argument("--delta", type=float, default=0.1)
            c.add_argument("--commutator", choices=("kinetic", "matrix"), default="kinetic")
    return p


def _require_kind(doc: dict, kind: str, command: str):
    if doc.get("kind") != kind:
        raise CommandFailed({"error": "wrong-kind",
                             "message": f"{command} needs a {kind!r} config, got {doc.get('kind')!r}"})


def _default_eps(doc: dict, h) -> tuple[float, dict]:
    fine = assemble(cfg.build_euclid(cfg.refined(doc)))
    gate = spc.refinement_gate(h, fine)
    if not gate.passed:
        raise CommandFailed({"error": "refinement-gate", "message": "grid refinement drift above 1%",
                             "gate": gate.to_json()})
    return 10.0 * gate.residual, gate.to_json()


def _euclid(doc):
    return assemble(cfg.build_euclid(doc))


def _eps_for(args, doc, h, out: dict) -> float:
    if args.eps is not None:
        out["eps_source"] = "argument"
        return args.eps
    eps, gate = _default_eps(doc, h)
    out["eps_source"] = "refinement-gate"
    out["refinement"] = gate
    return eps


def cmd_validate(args, doc, outdir: Path) -> tuple[dict, dict[str, str]]:
    # validation already ran; reaching here means the config is well formed
    res = {"valid": True, "kind": doc["kind"]}
    if doc["kind"] == "euclid":
        model = cfg.build_euclid(doc)
        h = assemble(model)
        res["lattice"] = model.lattice.to_json()
        res["dimension"] = h.size
        res["hermitian_defect"] = h.hermitian_defect()
    else:
        gm = cfg.build_group(doc)
        res["lattice"] = gm.lattice.to_json()
        res["group_order"] = gm.group.order
    return res, {}


def cmd_spectrum(args, doc, outdir):
    _require_kind(doc, "euclid", "spectrum")
    h = _euclid(doc)
    res = {}
    eps = _eps_for(args, doc, h, res)
    rep = spc.spectral_report(h, eps, args.count)
    res.update(rep.to_json())
    res["eps"] = eps
    rows = ["element,index,eigenvalue"]
    for x, vals in sorted(rep.eigenvalues.items()):
        rows.extend(f"{x},{i},{v!r}" for i, v in enumerate(vals))
    return res, {"eigenvalues.csv": "\n".join(rows) + "\n"}


def cmd_hvz(args, doc, outdir):
    _require_kind(doc, "euclid", "hvz")
    h = _euclid(doc)
    return spc.hvz_tau(h).to_json(), {}


def cmd_thresholds(args, doc, outdir):
    _require_kind(doc, "euclid", "thresholds")
    h = _euclid(doc)
    res = {}
    eps = _eps_for(args, doc, h, res)
    rep = spc.threshold_set_numeric(h, eps)
    pts = list(rep.points.points)
    lo = args.lambda_min if args.lambda_min is not None else (min(pts) if pts else 0.0) - 1.0
    hi = args.lambda_max if args.lambda_max is not None else max(pts + [0.0]) + 2.0
    lambdas = np.linspace(lo, hi, args.lambda_count)
    cmp = spc.rho_hat_numeric(h, lambdas, eps, rep)
    res.update(rep.to_json())
    res["rho_profile"] = {"lambda_min": lo, "lambda_max": hi, "count": args.lambda_count,
                          "direct_vs_recursive": cmp.discrepancy}
    return res, {"rho_hat.csv": cmp.direct.to_csv(), "rho_hat.dat": cmp.direct.to_dat()}


def cmd_mourre(args, doc, outdir):
    _require_kind(doc, "euclid", "mourre")
    h = _euclid(doc)
    res = {}
    eps = _eps_for(args, doc, h, res)
    rep = spc.mourre_check(h, args.lam, args.delta, eps, mode=args.commutator)
    res.update(rep.to_json())
    res["eps"] = eps
    if rep.status == "fail":
        raise CommandFailed({"error": "mourre-fail", "message": "compressed commutator below bound",
                             "report": res})
    return res, {}


def cmd_algebra_verify(args, doc, outdir):
    _require_kind(doc, "group", "algebra-verify")
    gm = cfg.build_group(doc)
    res = {"group": repr(gm.group)}
    subs = None if gm.all_subgroups else sorted(set(gm.binding.values()), key=lambda s: s.members)
    suite = run_suite(gm.group, subs, gm.checks, gm.sample, gm.seed)
    res["identities"] = suite.to_json(include_results=False)
    res["identities"].pop("group", None)
    alg = assemble_C(gm.lattice, gm.binding)
    law = product_law(alg)
    res["product_law"] = {"checked": len(law), "failures": [[e, f] for e, f, c in law if not c.equal]}
    res["grading_overlap"] = grading_overlap(alg)
    ok = suite.passed and not res["product_law"]["failures"]
    if gm.generation:
        gen = pauli_fierz_generation(gm.lattice, gm.binding)
        res["generation"] = {"generated_dim": gen.comparison.rank_a, "assembled_dim": gen.comparison.rank_b,
                             "equal": gen.comparison.equal, "field_pairs": [list(p) for p in gen.field_pairs],
                             "pairs_without_complement": [list(p) for p in gen.skipped_pairs],
                             "seeds": gen.n_seeds}
        ok = ok and gen.comparison.equal
    res["passed"] = ok
    if not ok:
        raise CommandFailed({"error": "identity-failure", "message": "span identities failed",
                             "report": res})
    return res, {}


HANDLERS = {"validate": cmd_validate, "spectrum": cmd_spectrum, "hvz": cmd_hvz,
            "thresholds": cmd_thresholds, "mourre": cmd_mourre, "algebra-verify": cmd_algebra_verify}


def _write(outdir: Path, name: str, text: str, written: list):
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / name).write_text(text)
    written.append(str(outdir / name))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    outdir = Path(args.out)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    written: list[str] = []
    sha = None
    stem = args.command.replace("-", "_")
    code = EXIT_OK
    try:
        doc, raw = cfg.load(args.config)
        sha = hashlib.sha256(raw).hexdigest()
        diags = cfg.validate(doc)
    except cfg.ParseError as exc:
        try:
            sha = hashlib.sha256(Path(args.config).read_bytes()).hexdigest()
        except OSError:
            pass
        print(json.dumps({"error": "parse", "message": str(exc)}), file=sys.stderr)
        code, diags = EXIT_INPUT, None
    if code == EXIT_INPUT:
        pass
    elif diags:
        payload = {"schema_version": cfg.SCHEMA_VERSION, "valid": False,
                   "diagnostics": [d.to_json() for d in diags]}
        _write(outdir, f"{stem}.json", cfg.dump(payload), written)
        print(cfg.dump(payload), file=sys.stderr, end="")
        code = EXIT_FAIL
    else:
        try:
            result, extra = HANDLERS[args.command](args, doc, outdir)
            result["schema_version"] = cfg.SCHEMA_VERSION
            _write(outdir, f"{stem}.json", cfg.dump(result), written)
            for name, text in extra.items():
                _write(outdir, name, text, written)
            print(cfg.dump(result), end="")
        except CommandFailed as exc:
            payload = {"schema_version": cfg.SCHEMA_VERSION, **exc.payload}
            _write(outdir, f"{stem}.json", cfg.dump(payload), written)
            print(json.dumps({"error": exc.payload.get("error"), "message": str(exc)}), file=sys.stderr)
            code = EXIT_FAIL
        except (spc.SpectralError, ModelError, cfg.ConfigError, AssertionError) as exc:
            payload = {"schema_version": cfg.SCHEMA_VERSION, "error": type(exc).__name__,
                       "message": str(exc)}
            _write(outdir, f"{stem}.json", cfg.dump(payload), written)
            print(json.dumps(payload), file=sys.stderr)
            code = EXIT_FAIL
    manifest = {
        "schema_version": cfg.SCHEMA_VERSION, "command": args.command,
        "argv": list(sys.argv[1:] if argv is None else argv),
        "config": {"path": str(Path(args.config).resolve()), "sha256": sha},
        "version": __version__, "started_at": started.isoformat(),
        "wall_clock_seconds": time.perf_counter() - t0,
        "outputs": sorted(written), "exit_code": code,
    }
    _write(outdir, "manifest.json", cfg.dump(manifest), [])
    return code


if __name__ == "__main__":
    sys.exit(main())
