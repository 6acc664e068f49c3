"""Command-line front end.

Exit codes: 0 success, 2 verification failure, 1 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .config import RunConfig, load_config
from .dirichlet import conrey_label, parse_character
from .errors import HidaInterpError, VerificationFailure
from .exact_arith import CyclotomicNumber, PadicScalar, format_padic, pretty_scalar
from .formal import AlphaElement

SCHEMA = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# helpers

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, (CyclotomicNumber, AlphaElement)):
        return pretty_scalar(x) if isinstance(x, CyclotomicNumber) else str(x)
    if isinstance(x, PadicScalar):
        return format_padic(x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _emit(args, record: dict, table: str) -> None:
    if args.emit == "json":
        out = {"schema": SCHEMA, "command": args.command}
        out.update(_jsonable(record))
        sys.stdout.write(json.dumps(out, sort_keys=True) + "\n")
    else:
        sys.stdout.write(table if table.endswith("\n") else table + "\n")


def _num(x, digits: int) -> str:
    import mpmath
    with mpmath.workdps(digits):
        return mpmath.nstr(x, digits)


def resolve_form(name: str, cfg: RunConfig, B: int = 2000):
    """Built-in catalog, then <catalog>/<name>.qexp, then the derived weight-4 form 11k4."""
    from .qexp_analytic import builtin_eigenforms, parse_qexpansion
    cat = builtin_eigenforms(B)
    if name in cat:
        return cat[name]
    if cfg.catalog:
        path = os.path.join(cfg.catalog, f"{name}.qexp")
        if os.path.exists(path):
            with open(path) as fh:
                return parse_qexpansion(fh.read(), name=name)
    from .family_finite import DERIVED_FORMS, derived_form
    if name in DERIVED_FORMS:
        return derived_form(name)
    raise UsageError(f"unknown form {name!r}")


def _character(label: str):
    try:
        return parse_character(label)
    except ValueError as e:
        raise UsageError(str(e)) from None


# ---------------------------------------------------------------------------
# subcommands

def cmd_space(args, cfg):
    from .modsym import build_space, cuspidal_subspace, plus_minus_decompose, star
    from . import linalg as la
    S = build_space(args.N, args.k, args.ring, args.flavor)
    rec = {"N": args.N, "k": args.k, "ring": args.ring, "flavor": args.flavor}
    if S.ring.is_field:
        F = S.F
        cusp = cuspidal_subspace(S)
        st = cusp.restrict(star(S))
        n = cusp.dimension
        I = la.identity(n, F)
        plus = la.rank(la.mat_add(I, st, F), F) if n else 0
        rec.update(total=S.dimension, cuspidal=n, plus=plus, minus=n - plus)
        table = (f"MS_{args.k}(Gamma_{args.flavor[1]}({args.N})) over {args.ring}\n"
                 f"total     {S.dimension}\ncuspidal  {n}\nplus      {plus}\nminus     {n - plus}\n")
    else:
        rec.update(invariants=S.invariants, ngens=S.ngens)
        table = f"invariants {S.invariants} ({S.ngens} generators)\n"
    _emit(args, rec, table)


def cmd_eigenform(args, cfg):
    from .qexp_analytic import check_recurrences, format_qexpansion
    f = resolve_form(args.form, cfg).truncate(args.B)
    rec = {"form": args.form, "k": f.k, "N": f.N, "coeffs": f.coeffs, "recurrences": check_recurrences(f)}
    _emit(args, rec, format_qexpansion(f))


def cmd_error_terms(args, cfg):
    from .interp_compare import error_terms_for
    f = resolve_form(args.form, cfg)
    t = error_terms_for(f.name, cfg.digits)
    rec = {"form": args.form, "digits": cfg.digits, "delta_plus": _num(t.plus, cfg.digits),
           "delta_minus": _num(t.minus, cfg.digits), "residual": float(t.residual), "paths": t.npaths}
    table = (f"delta+   {rec['delta_plus']}\ndelta-   {rec['delta_minus']}\n"
             f"residual {t.residual:.3e} on {t.npaths} closed paths\n")
    _emit(args, rec, table)


def cmd_stabilize(args, cfg):
    from .stabilize import roots, vieta_check
    f = resolve_form(args.form, cfg)
    d = roots(f, args.p, prec=cfg.prec, digits=cfg.digits)
    rec = {"form": args.form, "p": args.p, "a_p": d.a_p, "ordinary": d.ordinary,
           "alpha_exact": d.alpha_exact, "alpha_padic": d.alpha_padic,
           "alpha_complex": _num(d.alpha_complex, 15), "vieta": vieta_check(d)}
    table = "\n".join(f"{k:14} {_jsonable(v)}" for k, v in rec.items()) + "\n"
    _emit(args, rec, table)


def cmd_measure(args, cfg):
    from .padic_measures import format_measure, mtt_measure
    f = resolve_form(args.form, cfg)
    mu = mtt_measure(f, args.p, args.r, D=args.D, sign=args.sign)
    rec = {"form": args.form, "p": args.p, "r": args.r, "D": args.D, "sign": args.sign,
           "values": {a: v for a, v in sorted(mu.values.items())},
           "distribution": mu.check_distribution(), "bounded": mu.is_bounded(cfg.prec)}
    _emit(args, rec, format_measure(mu))


def _input(args, cfg, f):
    from .interp_compare import InterpolationInput, input_from_spec
    from .padic_measures import parse_family_spec
    chi = _character(args.chi)
    try:
        if getattr(args, "family_spec", None):
            with open(args.family_spec) as fh:
                spec = parse_family_spec(fh.read(), f)
            if spec.p != args.p:
                raise UsageError("family spec is for a different prime")
            return input_from_spec(spec, chi, args.n, orientation=cfg.orientation)
        return InterpolationInput(f, args.p, chi, args.n, orientation=cfg.orientation)
    except ValueError as e:
        raise UsageError(str(e)) from None


def cmd_interp(args, cfg):
    from .interp_compare import (algebraic_ratio, algebraic_value, fk_value, kitagawa_value,
                                 p_adic_period, with_analytic_data)
    f = resolve_form(args.form, cfg)
    inp = _input(args, cfg, f)
    fk, kit = fk_value(inp), kitagawa_value(inp)
    rec = {"form": args.form, "p": args.p, "chi": conrey_label(inp.chi), "n": args.n, "s": inp.s,
           "m": inp.m, "D": inp.D, "fukaya_kato": fk.describe(), "kitagawa": kit.describe()}
    lines = [f"chi={rec['chi']} n={args.n} s={inp.s:+d} m={inp.m} D={inp.D}",
             f"fukaya_kato  {rec['fukaya_kato']}", f"kitagawa     {rec['kitagawa']}"]
    if not args.no_analytic and f.name:
        with_analytic_data(inp, cfg.digits)
        ratio, _ = algebraic_ratio(inp, cfg.digits)
        rec["ratio"] = ratio
        rec["fukaya_kato_algebraic"] = algebraic_value(fk, ratio, inp).describe()
        rec["kitagawa_algebraic"] = algebraic_value(kit, ratio, inp).describe()
        lines += [f"G(chi*) L / ((2 pi i)^e delta_inf) = {pretty_scalar(ratio)}",
                  f"fukaya_kato  {rec['fukaya_kato_algebraic']}",
                  f"kitagawa     {rec['kitagawa_algebraic']}"]
    if inp.delta_p is not None and inp.U_minus is not None:
        rec["p_adic_period"] = str(p_adic_period(inp, cfg.prec))
        lines.append(f"Omega_p      {rec['p_adic_period']}")
    _emit(args, rec, "\n".join(lines))


def cmd_compare(args, cfg):
    from .interp_compare import check_quotient_identity, quotient_chain
    f = resolve_form(args.form, cfg)
    inp = _input(args, cfg, f)
    if args.D is not None and args.D != inp.D:
        raise UsageError(f"--D {args.D} does not match the tame conductor {inp.D} of chi")
    qc = quotient_chain(inp)
    ok = check_quotient_identity(inp)
    u = "U^-" if inp.U_minus is None else format_padic(inp.U_minus)
    rec = {"form": args.form, "p": args.p, "chi": conrey_label(inp.chi), "n": args.n, "D": inp.D,
           "quotient": qc.value.describe(), "lines": [l.describe() for l in qc.lines],
           "U_minus": u, "identity": ok}
    table = "\n".join([f"quotient   {rec['quotient']}", *(f"line {i + 1}     {l}" for i, l in enumerate(rec["lines"])),
                       f"U^-        {u}", f"fk * quotient == kitagawa: {ok}"])
    _emit(args, rec, table)
    if not ok:
        raise VerificationFailure("fk_value * quotient != kitagawa_value")


def parse_sweep(text: str):
    """Lines 'form p chi n'."""
    out = []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].split()
        if not ln:
            continue
        if len(ln) != 4:
            raise UsageError("sweep lines are 'form p chi n'")
        out.append((ln[0], int(ln[1]), _character(ln[2]), int(ln[3])))
    return out


def cmd_audit_signs(args, cfg):
    from .interp_compare import format_audit, sign_audit
    samples = None
    if args.sweep != "default":
        with open(args.sweep) as fh:
            samples = parse_sweep(fh.read())
    rows = sign_audit(samples)
    rec = {"rows": [r.as_dict() for r in rows]}
    _emit(args, rec, format_audit(rows))


def cmd_control_check(args, cfg):
    from .modsym import control_check
    rep = control_check(args.N, args.p, args.k, args.t, args.r)
    rec = {"N": args.N, "p": args.p, "k": args.k, "t": args.t, "r": args.r,
           "source": rep.source_invariants, "target": rep.target_invariants,
           "image": rep.image_invariants, "equivariant": rep.equivariant, "bijective": rep.bijective}
    table = "\n".join(f"{k:11} {v}" for k, v in rec.items())
    _emit(args, rec, table)
    if not (rep.bijective and rep.equivariant):
        raise VerificationFailure("weight lowering is not a bijection on ordinary parts")


def cmd_trace_check(args, cfg):
    from .family_finite import trace_system_check
    rep = trace_system_check(args.N, args.p, args.t, args.r, args.k, raise_on_failure=False)
    rec = {"levels": list(rep.levels), "t": rep.t, "ranks": [list(x) for x in rep.ranks],
           "equivariant": rep.equivariant, "onto_ordinary": rep.onto_ordinary,
           "sigma_relation": rep.sigma_relation, "compatible": rep.compatible, "ok": rep.ok}
    table = "\n".join(f"{k:15} {v}" for k, v in rec.items())
    _emit(args, rec, table)
    if not rep.ok:
        raise VerificationFailure("trace compatibility fails")


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hida-interp", description="Interpolation checks for ordinary modular forms.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--cache-dir")
    ap.add_argument("--digits", type=int)
    ap.add_argument("--prec", type=int)
    ap.add_argument("--orientation", choices=("standard", "reversed"))
    ap.add_argument("--catalog", help="directory with extra <name>.qexp files")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--emit", choices=("table", "json"), default="table")
        p.set_defaults(func=fn)
        return p

    p = add("space", cmd_space, "dimensions of a modular-symbol space")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--ring", default="QQ")
    p.add_argument("--flavor", default="G0", choices=("G0", "G1"))

    p = add("eigenform", cmd_eigenform, "q-expansion of a catalog form")
    p.add_argument("--form", required=True)
    p.add_argument("--B", type=int, default=30)

    p = add("error-terms", cmd_error_terms, "complex error terms delta+-")
    p.add_argument("--form", required=True)

    p = add("stabilize", cmd_stabilize, "roots of the Hecke polynomial at p")
    p.add_argument("--form", required=True)
    p.add_argument("--p", type=int, required=True)

    p = add("measure", cmd_measure, "finite-level measure table")
    p.add_argument("--form", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--D", type=int, default=1)
    p.add_argument("--sign", type=int, default=1, choices=(1, -1))

    for name, fn, help_ in (("interp", cmd_interp, "both interpolation values at a point"),
                            ("compare", cmd_compare, "quotient of the two interpolation values")):
        p = add(name, fn, help_)
        p.add_argument("--form", required=True)
        p.add_argument("--p", type=int, required=True)
        p.add_argument("--chi", default="trivial")
        p.add_argument("--n", type=int, default=1)
        p.add_argument("--family-spec")
        if name == "compare":
            p.add_argument("--D", type=int)
        else:
            p.add_argument("--no-analytic", action="store_true", help="skip the L-value recognition")

    p = add("audit-signs", cmd_audit_signs, "chi_p(-1) audit under both orientations")
    p.add_argument("--sweep", default="default", help="'default' or a file of 'form p chi n' lines")

    p = add("control-check", cmd_control_check, "weight lowering on ordinary parts mod p^t")
    for a in ("N", "p", "k", "t", "r"):
        p.add_argument(f"--{a}", type=int, required=True)

    p = add("trace-check", cmd_trace_check, "trace compatibility between levels Np^r and Np^(r+1)")
    for a in ("N", "p", "t", "r"):
        p.add_argument(f"--{a}", type=int, required=True)
    p.add_argument("--k", type=int, default=2)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        cfg = RunConfig.from_env()
        if args.config:
            cfg = load_config(args.config, cfg)
        cfg = cfg.updated(cache_dir=args.cache_dir, digits=args.digits, prec=args.prec,
                          orientation=args.orientation, catalog=args.catalog)
        cfg.apply()
        args.func(args, cfg)
        return 0
    except UsageError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    except VerificationFailure as e:
        sys.stderr.write(f"verification failed: {type(e).__name__}: {e}\n")
        return 2
    except (HidaInterpError, ValueError, OSError) as e:
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
