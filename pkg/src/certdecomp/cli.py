"""Command-line front end.

Exit codes: 0 success, 1 a verification check failed, 2 usage error,
3 instance shape does not fit the mode, 4 numerical failure.
"""

import argparse
import json
import datetime as _dt
import sys
import time

import numpy as np

from . import model
from .certify import (
    CertificateError,
    ProtocolFormatError,
    eps_cert,
    load_certificate,
    load_protocol,
    save_certificate,
    save_protocol,
)
from .engines import (
    ELLIPSOID,
    SUBGRADIENT,
    NoProductiveStepError,
    RunConfig,
    ShapeMismatchError,
    default_Y2,
    recover_lagrangian,
    recover_saddle,
    solve_benders,
    solve_direct,
    solve_lagrangian,
    solve_saddle_general,
)
from .lp_kernel import KernelError
from .oracles import InstanceInfeasibleError
from .solids import Box, Product, parse_solid_spec, solid_from_dict

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SHAPE, EXIT_NUMERIC = 0, 1, 2, 3, 4
MODES = ("direct", "benders", "lagrangian", "saddle")
TOL = 1e-8


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.ndarray):
        return "[" + ", ".join(repr(float(x)) for x in v) + "]"
    if v is None:
        return "n/a"
    return str(v)


def _passfail(ok):
    if ok is None:
        return "N/A"
    return "PASS" if ok else "FAIL"


class Report:
    """``key: value`` lines, then a human table; one header line carries the clock."""

    def __init__(self, title):
        self.title = title
        self.items = []
        self.table = []
        self.t0 = time.perf_counter()

    def add(self, key, value):
        self.items.append((key, _fmt(value)))

    def check(self, name, ok):
        self.items.append((name, _passfail(ok)))
        return ok

    def render(self):
        wall = time.perf_counter() - self.t0
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        lines = [f"# {self.title} generated={stamp} wall_time={wall:.3f}s"]
        lines += [f"{k}: {v}" for k, v in self.items]
        if self.table:
            lines.append("")
            lines.append("---")
            widths = [max(len(str(r[i])) for r in self.table) for i in range(len(self.table[0]))]
            for r in self.table:
                lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"

    @property
    def failed(self):
        return any(v == "FAIL" for _, v in self.items)


def machine_section(text):
    """The deterministic ``key: value`` part of a rendered report."""
    out = []
    for line in text.splitlines()[1:]:
        if line == "":
            break
        out.append(line)
    return out


def _emit(report, path):
    text = report.render()
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _config(args):
    return RunConfig(method=args.method, max_steps=args.steps, target_eps=args.eps,
                     seed=args.seed, check_every=args.check_every)


# ------------------------------------------------------------------ commands

def cmd_generate(args):
    inst = model.generate(args.K, args.n1k, args.m1k, args.n2, args.m2, R=args.R,
                          density=args.density, seed=args.seed,
                          force_infeasible_x2=args.force_infeasible_x2)
    model.save(inst, args.out)
    print(f"wrote {args.out}: K={inst.K} n1={inst.n1} m1={inst.m1} n2={inst.n2} "
          f"m2={inst.m2} R={inst.R!r}")
    return EXIT_OK


def _shape_guard(inst, mode):
    if mode == "benders" and inst.m2 != 0:
        raise ShapeMismatchError(f"benders mode needs m2 = 0, instance has m2 = {inst.m2}")
    if mode == "lagrangian" and inst.n2 != 0:
        raise ShapeMismatchError(f"lagrangian mode needs n2 = 0, instance has n2 = {inst.n2}")
    if mode == "saddle" and (inst.n2 < 1 or inst.m2 < 1):
        raise ShapeMismatchError(
            f"saddle mode needs n2 >= 1 and m2 >= 1, instance has n2 = {inst.n2}, "
            f"m2 = {inst.m2}")


def _solve_into(report, inst, args, mode):
    """Run one mode, filling ``report``; returns (objective, eps, eps_sad)."""
    cfg = _config(args)
    report.add("mode", mode)
    report.add("dims", f"K={inst.K} n1={inst.n1} m1={inst.m1} n2={inst.n2} m2={inst.m2}")
    direct = solve_direct(inst)
    report.add("direct.status", direct.status)
    report.add("direct.opt", direct.opt)
    if mode == "direct":
        report.add("objective", direct.opt)
        report.add("duals.y1", direct.y1)
        report.add("duals.y2", direct.y2)
        return direct.opt, None, None
    if direct.status != "Optimal":
        raise KernelError("direct reference solve did not return Optimal")
    report.add("method", cfg.method)
    report.add("steps.max", cfg.max_steps)
    if mode == "benders":
        res = solve_benders(inst, cfg)
        report.add("steps.used", len(res.protocol))
        report.add("steps.non_productive", res.n_separators)
        report.add("objective", res.obj)
        report.add("eps_cert", res.eps)
        x = np.concatenate([res.x1, res.x2])
        lp = model.assemble_full(inst)
        viol = float(max(0.0, (lp.A @ x - lp.b).max(initial=0.0)))
        report.add("max_violation", viol)
        report.add("gap_to_direct", res.obj - direct.opt)
        report.check("objective within eps of direct", abs(res.obj - direct.opt) <= res.eps + 1e-6)
        report.check("feasible", viol <= 1e-7)
        protocol, cert = res.protocol, res.cert
        out = (res.obj, res.eps, None)
    elif mode == "lagrangian":
        L = args.L if args.L is not None else 10.0 * (1.0 + float(direct.y2.sum()))
        rec = solve_lagrangian(inst, L, cfg, opt=direct.opt, ytilde2=direct.y2)
        rep = rec.bounds_report
        report.add("L", L)
        report.add("steps.used", len(rec.protocol))
        report.add("objective", rep["obj"])
        report.add("dual_obj", rec.dual_obj)
        report.add("eps_cert", rec.eps_cert)
        _lagrangian_checks(report, inst, rep)
        protocol, cert = rec.protocol, rec.cert
        out = (rep["obj"], rec.eps_cert, None)
    else:
        Y2 = default_Y2(inst, kind=args.y2_kind, L2=args.L, direct=direct)
        sol = solve_saddle_general(inst, cfg, Y2=Y2, direct=direct)
        report.add("Y2", json.dumps(Y2.to_dict()))
        report.add("steps.used", len(sol.protocol))
        report.add("objective", sol.recovered["obj"])
        report.add("max_violation", sol.recovered["max_violation"])
        report.add("eps_cert", sol.eps_cert)
        report.add("eps_sad", sol.eps_sad_measured)
        report.add("eps_sad_induced_1", sol.eps_sad_induced[0])
        report.add("eps_sad_induced_2", sol.eps_sad_induced[1])
        report.add("y2_on_boundary", sol.y2_on_boundary)
        _saddle_checks(report, sol)
        protocol, cert = sol.protocol, sol.cert
        out = (sol.recovered["obj"], sol.eps_cert, sol.eps_sad_measured)
    if getattr(args, "protocol_out", None):
        save_protocol(protocol, args.protocol_out)
    if getattr(args, "cert_out", None):
        save_certificate(cert, args.cert_out)
    return out


def _lagrangian_checks(report, inst, rep):
    report.add("bounds.b1_violation", rep["b1_feas"])
    report.add("bounds.box_violation", rep["box_feas"])
    report.add("bounds.b2_slack", rep["b2_slack"])
    report.add("bounds.obj_slack", rep["obj_slack"])
    report.add("bounds.reference", rep["reference"])
    report.check("primal feasibility (A11 x <= b1, box)",
                 rep["b1_feas"] <= 1e-9 and rep["box_feas"] <= 1e-9)
    report.check("linking rows bound", rep["b2_slack"] >= -1e-7)
    report.check("objective bound", rep["obj_slack"] >= -1e-7)
    rb = rep.get("refined")
    if rb is not None:
        report.add("refined.ell", rb["ell"])
        report.add("refined.slack", rb["slack"])
        report.check("refined linking bound", rb["holds"])


def _saddle_checks(report, sol):
    report.check("eps_sad ≤ eps_cert", sol.gap_bound_holds)
    report.check("eps_sad_induced ≤ eps_cert", sol.induced_hold)


def cmd_solve(args):
    inst = model.load(args.inp)
    _shape_guard(inst, args.mode)
    report = Report("certdecomp solve")
    report.add("instance", args.inp)
    _solve_into(report, inst, args, args.mode)
    _emit(report, args.report_out)
    return EXIT_OK


def _domain_for(protocol, inst, args):
    if args.B:
        return parse_solid_spec(args.B, protocol.steps[0].z.shape[0] if protocol.steps else None)
    if protocol.domain is None:
        raise ProtocolFormatError("protocol dump has no domain; pass --B")
    return protocol.domain


def cmd_verify(args):
    inst = model.load(args.inp)
    protocol = load_protocol(args.protocol)
    cert = load_certificate(args.cert)
    report = Report("certdecomp verify")
    mode = protocol.meta.get("mode")
    report.add("mode", mode)
    report.add("steps", len(protocol))
    try:
        cert.check(protocol)
        report.check("certificate valid", True)
    except CertificateError as exc:
        report.add("certificate.error", str(exc))
        report.check("certificate valid", False)
        _emit(report, args.report_out)
        return EXIT_FAIL
    B = _domain_for(protocol, inst, args)
    if B.dim != protocol.steps[0].z.shape[0]:
        raise ProtocolFormatError("B does not match the protocol dimension")
    eps = eps_cert(cert, protocol, B)
    report.add("eps_cert", eps)
    _check_separators(report, protocol)
    direct = solve_direct(inst)
    if mode == "lagrangian":
        _shape_guard(inst, "lagrangian")
        L = float(protocol.meta.get("L", getattr(B, "L", 0.0)))
        rec = recover_lagrangian(inst, protocol, cert, L, opt=direct.opt,
                                 ytilde2=direct.y2, B=B)
        _lagrangian_checks(report, inst, rec.bounds_report)
    elif mode == "saddle":
        _shape_guard(inst, "saddle")
        Y2 = solid_from_dict(protocol.meta["Y2"])
        sol = recover_saddle(inst, protocol, cert, Y2, B=B, opt=direct.opt)
        report.add("eps_sad", sol.eps_sad_measured)
        report.add("eps_sad_induced_1", sol.eps_sad_induced[0])
        report.add("eps_sad_induced_2", sol.eps_sad_induced[1])
        _saddle_checks(report, sol)
    elif mode == "benders":
        _shape_guard(inst, "benders")
        prod = [s for s in protocol.steps if s.productive]
        best = min(prod, key=lambda s: s.fvalue)
        x = np.concatenate([best.payload["x1"], best.z])
        lp = model.assemble_full(inst)
        viol = float(max(0.0, (lp.A @ x - lp.b).max(initial=0.0)))
        obj = float(lp.c @ x)
        report.add("objective", obj)
        report.add("max_violation", viol)
        report.check("objective within eps of direct", abs(obj - direct.opt) <= eps + 1e-6)
        report.check("feasible", viol <= 1e-7)
    else:
        raise ProtocolFormatError(f"protocol dump has unknown mode {mode!r}")
    _emit(report, args.report_out)
    return EXIT_FAIL if report.failed else EXIT_OK


def _check_separators(report, protocol):
    """Separators recorded for points outside the domain must cut them off."""
    dom = protocol.domain
    if dom is None:
        return
    ok = True
    for s in protocol.steps:
        if not s.productive and not dom.contains(s.z):
            # <e, z'> < <e, z> for all z' in dom  <=>  support(e) < <e, z>
            ok &= dom.support(s.e)[0] < s.e @ s.z
    report.check("separators valid", ok)


def cmd_compare(args):
    inst = model.load(args.inp)
    modes = [m for m in args.modes.split(",") if m]
    for m in modes:
        if m not in MODES:
            print(f"error: unknown mode {m!r}", file=sys.stderr)
            return EXIT_USAGE
    report = Report("certdecomp compare")
    report.add("instance", args.inp)
    rows = [("mode", "objective", "eps_cert", "eps_sad", "time_s", "status")]
    status = EXIT_OK
    for m in ["direct"] + [m for m in modes if m != "direct"]:
        sub = Report("")
        t0 = time.perf_counter()
        try:
            _shape_guard(inst, m)
            obj, eps, gap = _solve_into(sub, inst, args, m)
            st = "FAIL" if sub.failed else "ok"
        except ShapeMismatchError as exc:
            obj = eps = gap = None
            st = f"shape mismatch: {exc}"
        except (KernelError, NoProductiveStepError, InstanceInfeasibleError) as exc:
            obj = eps = gap = None
            st = f"error: {exc}"
            if m == "direct":
                status = EXIT_NUMERIC
        if m == "direct" and obj is None:
            status = EXIT_NUMERIC
        dt = time.perf_counter() - t0
        report.add(f"{m}.objective", obj)
        report.add(f"{m}.eps_cert", eps)
        report.add(f"{m}.eps_sad", gap)
        report.add(f"{m}.status", st)
        rows.append((m, _fmt(obj), _fmt(eps), _fmt(gap), f"{dt:.3f}", st))
    report.table = rows
    _emit(report, args.report_out)
    return status


# ------------------------------------------------------------------- parser

def _positive_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="certdecomp",
                                description="Block-angular LP decomposition with certificates")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random feasible instance")
    g.add_argument("--K", type=int, required=True)
    g.add_argument("--n1k", type=_positive_int, required=True)
    g.add_argument("--m1k", type=_positive_int, required=True)
    g.add_argument("--n2", type=_positive_int, required=True)
    g.add_argument("--m2", type=_positive_int, required=True)
    g.add_argument("--R", type=float, default=10.0)
    g.add_argument("--density", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--force-infeasible-x2", action="store_true")
    g.set_defaults(func=cmd_generate)

    def run_flags(q):
        q.add_argument("--in", dest="inp", required=True)
        q.add_argument("--method", choices=(SUBGRADIENT, ELLIPSOID), default=SUBGRADIENT)
        q.add_argument("--steps", type=int, default=500)
        q.add_argument("--L", type=float, default=None,
                       help="simplex radius (lagrangian) or Y2 box size (saddle)")
        q.add_argument("--eps", type=float, default=1e-9, help="target certificate resolution")
        q.add_argument("--check-every", type=int, default=0)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--y2-kind", choices=("box", "simplex"), default="box")
        q.add_argument("--report-out", default=None)

    s = sub.add_parser("solve", help="solve an instance in one mode")
    run_flags(s)
    s.add_argument("--mode", choices=MODES, required=True)
    s.add_argument("--protocol-out", default=None)
    s.add_argument("--cert-out", default=None)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="re-check a protocol dump and certificate")
    v.add_argument("--in", dest="inp", required=True)
    v.add_argument("--protocol", required=True)
    v.add_argument("--cert", required=True)
    v.add_argument("--B", default=None, help="solid spec, e.g. 'simplex:50' or 'box:-10:10@3;box:0:90@2'")
    v.add_argument("--report-out", default=None)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compare", help="side-by-side table of modes")
    run_flags(c)
    c.add_argument("--modes", required=True, help="comma list of modes")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "steps", 1) < 1:
        parser.error("--steps must be >= 1")
    try:
        return args.func(args)
    except ShapeMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except (KernelError, InstanceInfeasibleError, NoProductiveStepError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (model.InstanceFormatError, model.InvalidInstanceError, ProtocolFormatError,
            CertificateError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
