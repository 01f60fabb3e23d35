"""Command-line front end.

Every subcommand reads one JSON document (a structure file or an atlas file,
optionally with a "job" section) and prints a JSON report.  Exit codes:
0 when everything passes, 1 on a mathematical failure, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .atlas import (
    AtlasError,
    ConformalAtlas,
    GlobalPair,
    chart_independence,
    companion_of,
    contract_atlas,
    glue,
    lift_to_4gp,
    validate,
)
from .dynamics import BlowUp, HamiltonianSystem, integrate, run_diagnostics
from .expr import ExprError, SampleBox, parse
from .multivector import DifferentialForm, MultiVectorField, from_json
from .structures import (
    FunctionFamily,
    StructureCandidate,
    StructureError,
    VerificationReport,
    cascade_contract,
    cascade_stepwise,
    check_zero,
    fix_entries,
    jacobi_residuals,
    poisson_residual,
    verify,
)


class InputError(Exception):
    """Anything wrong with the job file itself (exit code 2)."""


# ---------------------------------------------------------------- loading

def load_document(path):
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise InputError(f"cannot read {path}: {err.strerror or err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise InputError(f"{path}: invalid JSON ({err})") from err
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be an object")
    return doc


def is_atlas(doc):
    return "charts" in doc


def _coords(doc):
    coords = doc.get("coordinates")
    if not isinstance(coords, list) or not coords:
        raise InputError("document needs a non-empty 'coordinates' list")
    if "dimension" in doc and int(doc["dimension"]) != len(coords):
        raise InputError("'dimension' does not match the coordinate list")
    return tuple(coords)


def _field(data, coords, order, kind=MultiVectorField):
    if data is None:
        return None
    f = from_json(data, coords, parse, kind)
    if not f.coeffs and f.order != order:
        f = kind(len(coords), order)
    return f


def load_structure(doc):
    coords = _coords(doc)
    kind = str(doc.get("kind", "")).lower()
    order = int(doc.get("order", 2))
    eta = _field(doc.get("eta"), coords, order)
    if eta is None:
        raise InputError("structure file needs an 'eta' tensor")
    comp = _field(doc.get("companion"), coords, order - 1)
    cand = StructureCandidate(kind, eta, comp)
    theta = _field(doc.get("theta"), coords, 1, DifferentialForm)
    return cand, coords, theta


def load_atlas(doc):
    return ConformalAtlas.from_json(doc)


def parse_list(items, coords, what):
    if not isinstance(items, list):
        raise InputError(f"job field '{what}' must be a list")
    return [parse(str(s), coords) for s in items]


def job_of(doc):
    job = doc.get("job", {})
    if not isinstance(job, dict):
        raise InputError("'job' must be an object")
    return job


def sample_box(dim, args, job, bounds=None):
    seed = args.seed if args.seed is not None else int(job.get("seed", 0))
    tol = args.tol if args.tol is not None else float(job.get("tol", 1e-9))
    n = args.samples if args.samples is not None else int(job.get("samples", 64))
    if bounds is None:
        bounds = job.get("box", [[-1.0, 1.0]] * dim)
    return SampleBox(tuple(tuple(b) for b in bounds), n, seed, tol)


# ---------------------------------------------------------------- serialization

def structure_json(cand, coords, theta=None):
    out = {
        "dimension": len(coords),
        "coordinates": list(coords),
        "kind": cand.kind,
        "order": cand.order,
        "eta": cand.eta.to_json(coords),
    }
    if cand.companion is not None:
        out["companion"] = cand.companion.to_json(coords)
    if theta is not None:
        out["theta"] = theta.to_json(coords)
    return out


def emit(payload, args):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as err:
            raise InputError(f"cannot write {args.out}: {err}") from err


def _result(command, passed, **sections):
    out = {"command": command, "pass": bool(passed)}
    out.update(sections)
    return out


# ---------------------------------------------------------------- commands

def cmd_verify(args):
    doc = load_document(args.file)
    job = job_of(doc)
    if is_atlas(doc):
        atlas = load_atlas(doc)
        box = sample_box(atlas.dim, args, job)
        rep = validate(atlas, box)
    else:
        cand, coords, _ = load_structure(doc)
        box = sample_box(cand.dim, args, job)
        fam = FunctionFamily.standard(cand.dim, seed=box.seed)
        rep = verify(cand, fam, box)
    emit(_result("verify", rep.passed, identities=rep.to_json()), args)
    return 0 if rep.passed else 1


def _glued(doc, args, job):
    atlas = load_atlas(doc)
    box = sample_box(atlas.dim, args, job)
    rep = validate(atlas, box)
    if not rep.passed:
        return atlas, None, rep, box
    gp = glue(atlas, box, check=False)
    return atlas, gp, rep, box


def cmd_glue(args):
    doc = load_document(args.file)
    if not is_atlas(doc):
        raise InputError("glue needs an atlas file")
    job = job_of(doc)
    atlas, gp, rep, box = _glued(doc, args, job)
    if gp is None:
        emit(_result("glue", False, validation=rep.to_json()), args)
        return 1
    theorem = verify(gp.candidate(), FunctionFamily.standard(atlas.dim, seed=box.seed), box)
    theorem.extend(chart_independence(atlas, gp, box))
    ok = theorem.passed
    emit(_result("glue", ok, validation=rep.to_json(), theorem=theorem.to_json(),
                 structure=structure_json(gp.candidate(), atlas.coords, gp.theta)), args)
    return 0 if ok else 1


def _system_from(doc, args, job):
    if is_atlas(doc):
        atlas, gp, rep, box = _glued(doc, args, job)
        if gp is None:
            return None, atlas.coords, rep, box
        structure, coords = gp, atlas.coords
    else:
        structure, coords, _ = load_structure(doc)
        box = sample_box(structure.dim, args, job)
    if "hamiltonians" not in job:
        raise InputError("job needs 'hamiltonians'")
    hs = parse_list(job["hamiltonians"], coords, "hamiltonians")
    try:
        system = HamiltonianSystem(structure, hs, box)
    except ValueError as err:
        raise InputError(str(err)) from err
    return system, coords, None, box


def cmd_flow(args):
    doc = load_document(args.file)
    job = job_of(doc)
    for key in ("x0", "t_end", "h"):
        if key not in job:
            raise InputError(f"job needs '{key}'")
    system, coords, failed, box = _system_from(doc, args, job)
    if system is None:
        emit(_result("flow", False, validation=failed.to_json()), args)
        return 1
    x0 = [float(v) for v in job["x0"]]
    if len(x0) != len(coords):
        raise InputError(f"x0 must have {len(coords)} entries")
    try:
        traj = integrate(system, x0, float(job["t_end"]), float(job["h"]))
    except (BlowUp, ValueError) as err:
        raise InputError(f"integration failed: {err}") from err
    if traj.blew_up:
        raise InputError(f"integration blew up after {traj.count} states")
    functions = parse_list(job["functions"], coords, "functions") if "functions" in job else None
    pair = parse_list(job["pair"], coords, "pair") if "pair" in job else None
    diag = run_diagnostics(system, traj, functions=functions, pair=pair)
    csv_path = args.csv or job.get("csv")
    if csv_path:
        try:
            with open(csv_path, "w", newline="") as fh:
                traj.to_csv(fh)
        except OSError as err:
            raise InputError(f"cannot write {csv_path}: {err}") from err
    final = [float(v) for v in traj.states[-1]]
    emit(_result("flow", diag.passed, diagnostics=diag.to_json(),
                 trajectory={"states": traj.count, "step": traj.h, "final": final}), args)
    return 0 if diag.passed else 1


def cmd_cascade(args):
    doc = load_document(args.file)
    job = job_of(doc)
    if is_atlas(doc):
        atlas = load_atlas(doc)
        box = sample_box(atlas.dim, args, job)
        fixers = parse_list(job.get("fixers", []), atlas.coords, "fixers")
        if not fixers:
            raise InputError("job needs 'fixers'")
        if len(fixers) > atlas.order - 2:
            raise InputError(f"at most {atlas.order - 2} fixers for order {atlas.order}")
        out = atlas
        for f in reversed(fixers):
            out = contract_atlas(out, f, box)
        rep = validate(out, box)
        emit(_result("cascade", rep.passed, validation=rep.to_json(), atlas=out.to_json()), args)
        return 0 if rep.passed else 1
    cand, coords, _ = load_structure(doc)
    if cand.kind not in ("np", "nj"):
        raise InputError("cascade needs a Nambu structure")
    box = sample_box(cand.dim, args, job)
    rep = VerificationReport()
    sections = {}
    if "split" in job:
        if cand.order != 3 or cand.companion is not None and not cand.companion.is_zero:
            raise InputError("'split' needs an order-3 Nambu-Poisson tensor")
        h1, h2 = parse_list(job["split"], coords, "split")
        fx = fix_entries(cand.eta, h1, h2, box)
        rep.extend(fx.report, prefix="split.")
        sections["split"] = {"lambda1": fx.lambda1.to_json(coords), "lambda2": fx.lambda2.to_json(coords)}
    if "fixers" in job:
        fixers = parse_list(job["fixers"], coords, "fixers")
        if len(fixers) != cand.order - 2:
            raise InputError(f"need exactly {cand.order - 2} fixers")
        lam, z = cascade_contract(cand.eta, cand.companion, fixers)
        lam2, z2 = cascade_stepwise(cand.eta, cand.companion, fixers)
        rep.add("cascade.stepwise_agreement",
                check_zero([("Lambda", lam - lam2), ("Z", z - z2)], box))
        if z.is_zero:
            rep.add("cascade.poisson", check_zero([("[L,L]", poisson_residual(lam))], box))
            result = StructureCandidate("poisson", lam)
        else:
            for name, r in jacobi_residuals(lam, z).items():
                rep.add(f"cascade.jacobi.{name}", check_zero([(name, r)], box))
            result = StructureCandidate("jacobi", lam, z)
        sections["structure"] = structure_json(result, coords)
    if not sections:
        raise InputError("job needs 'fixers' or 'split'")
    emit(_result("cascade", rep.passed, identities=rep.to_json(), **sections), args)
    return 0 if rep.passed else 1


def cmd_lift(args):
    doc = load_document(args.file)
    job = job_of(doc)
    if is_atlas(doc):
        atlas, gp, rep, box = _glued(doc, args, job)
        if gp is None:
            emit(_result("lift", False, validation=rep.to_json()), args)
            return 1
        coords = atlas.coords
    else:
        cand, coords, theta = load_structure(doc)
        if theta is None:
            raise InputError("lift from a structure file needs 'theta'")
        box = sample_box(cand.dim, args, job)
        comp = cand.companion if cand.companion is not None else companion_of(cand.eta, theta)
        gp = GlobalPair(cand.eta, theta, comp, "nj", coords)
    if gp.order != 3:
        raise InputError("lift needs an order-3 structure")
    if "hamiltonians" not in job:
        raise InputError("job needs 'hamiltonians'")
    hs = parse_list(job["hamiltonians"], coords, "hamiltonians")
    if len(hs) != 2:
        raise InputError("lift needs two Hamiltonians")
    lift = lift_to_4gp(gp, hs[0], hs[1], box)
    ok = lift.report.passed
    emit(_result("lift", ok, identities=lift.report.to_json(),
                 eta4=lift.eta4.to_json(coords), companion3=lift.companion3.to_json(coords)), args)
    return 0 if ok else 1


COMMANDS = {"verify": cmd_verify, "glue": cmd_glue, "flow": cmd_flow,
            "cascade": cmd_cascade, "lift": cmd_lift}


def build_parser():
    p = argparse.ArgumentParser(prog="lcnambu", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("file")
        s.add_argument("--out", help="also write the JSON report here")
        s.add_argument("--seed", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--samples", type=int)
        if name == "flow":
            s.add_argument("--csv", help="trajectory CSV path")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.command != "flow":
        args.csv = None
    try:
        return COMMANDS[args.command](args)
    except (InputError, ExprError, StructureError, AtlasError, KeyError, TypeError, ValueError) as err:
        if isinstance(err, AtlasError) and "does not validate" in str(err):
            sys.stderr.write(f"error: {err}\n")
            return 1
        sys.stderr.write(f"error: {err}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
