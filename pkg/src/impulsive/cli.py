"""Command-line front end.

Every subcommand takes flat ``key=value`` parameters, either as flags or
from ``--config FILE``; flags override file values. Reports go to stdout as
JSON (or to ``--json PATH``), the one-line verdict goes to stderr.
Exit status: 0 when the expected outcome is confirmed, 1 otherwise, 2 on
usage errors.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import _kernels
from .model import TIME_INVARIANT, TIME_VARYING, make_system, system_a, u_star
from .sequences import GammaStar, Periodic, as_time, load_times
from .signals import InputSignal, k_function, load_signal
from .sim import ENGINES, simulate
from .synth import falsify_iiss_candidate
from . import verify

OUT_DIR_ENV = "IMPULSIVE_OUT_DIR"


def _positive_int(s):
    v = int(s)
    if v <= 0:
        raise ValueError("must be a positive integer")
    return v


def _positive_float(s):
    v = float(s)
    if not (v > 0 and math.isfinite(v)):
        raise ValueError("must be positive")
    return v


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _time(s):
    t = as_time(s)
    if t < 0:
        raise ValueError("must be nonnegative")
    return t


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise ValueError("must be nonnegative")
    return v


def _choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return s
    return parse


def _kname(s):
    k_function(s)
    return s


def _beta_name(s):
    return s if s == "zero" else _kname(s)


def _deltas(s):
    vals = [_positive_float(p) for p in str(s).split(",") if p.strip()]
    if not vals:
        raise ValueError("need at least one delta")
    return ",".join(repr(v) for v in vals)


# name -> (parser, default, help); ``None`` default means required
PARAMS = {
    "simulate": {
        "system": (_choice("A", "B"), "A", "A: x'=-x, B: x'=-x+u"),
        "gamma": (str, "gammastar", "gammastar | periodic:FIRST:DWELL | file:PATH"),
        "mode": (_choice(TIME_VARYING, TIME_INVARIANT), TIME_VARYING, "jump map mode"),
        "t0": (_time, Fraction(0), "initial time"),
        "x0": (_float, 0.0, "initial state"),
        "tend": (_time, None, "final time"),
        "input": (str, "zero", "zero | ustar:NMAX | file:PATH"),
        "engine": (_choice(*ENGINES), "exact", "flow integrator"),
        "out": (str, "", "trajectory CSV path"),
    },
    "cics": {
        "nmax": (_positive_int, 10, "number of bursts"),
        "engine": (_choice(*ENGINES), "exact", "flow integrator"),
        "out": (str, "", "trajectory CSV path"),
    },
    "ts": {
        "deltas": (_deltas, "0.5,0.1,0.01", "comma-separated deltas"),
        "engine": (_choice(*ENGINES), "exact", "flow integrator"),
    },
    "iiss": {
        "delta1": (_positive_float, None, "initial-state size"),
        "delta2": (_positive_float, None, "input energy budget"),
        "rho1": (_kname, "id", "integral weight"),
        "rho2": (_kname, "id", "impulse weight"),
        "engine": (_choice(*ENGINES), "exact", "flow integrator"),
        "out": (str, "", "trajectory CSV path"),
    },
    "falsify": {
        "alpha": (_kname, "id", "candidate alpha"),
        "beta0": (_beta_name, "id", "candidate beta(r, 0); 'zero' for 0"),
        "rho1": (_kname, "id", "integral weight"),
        "rho2": (_kname, "id", "impulse weight"),
    },
    "guas": {
        "horizon": (_time, Fraction(30), "envelope check horizon"),
        "samples": (_positive_int, 200, "samples per run"),
        "kmax": (_nonneg_int, 6, "largest settling level"),
    },
    "ubebs": {
        "trials": (_positive_int, 1000, "random trials"),
        "seed": (_nonneg_int, 0, "RNG seed"),
        "horizon": (_time, Fraction(20), "trial horizon"),
    },
    "selftest": {},
}


@dataclass
class RunConfig:
    subcommand: str
    params: dict = field(default_factory=dict)

    @classmethod
    def build(cls, subcommand: str, raw: dict) -> "RunConfig":
        spec = PARAMS[subcommand]
        unknown = sorted(set(raw) - set(spec))
        if unknown:
            raise ValueError(f"unknown keys for {subcommand}: {', '.join(unknown)}")
        params = {}
        for key, (parse, default, _) in spec.items():
            if key in raw:
                try:
                    params[key] = parse(raw[key])
                except (ValueError, ZeroDivisionError) as exc:
                    raise ValueError(f"{key}: {exc}") from None
            elif default is None:
                raise ValueError(f"missing required parameter {key}")
            else:
                params[key] = default
        return cls(subcommand, params)

    def dumps(self) -> str:
        lines = [f"subcommand={self.subcommand}"]
        lines += [f"{k}={v}" for k, v in self.params.items()]
        return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="impulsive", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s (kernels: {_kernels.BACKEND})")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name, spec in PARAMS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value file; flags override")
        sp.add_argument("--dump-config", metavar="PATH", help="write the resolved config")
        sp.add_argument("--json", metavar="PATH", help="write the JSON report here instead of stdout")
        for key, (_, default, help_) in spec.items():
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, default=argparse.SUPPRESS,
                            help=f"{help_} (default: {default})" if default is not None else f"{help_} (required)")
    return p


def _out_path(name: str) -> Path | None:
    if not name:
        return None
    path = Path(name)
    if not path.is_absolute() and os.environ.get(OUT_DIR_ENV):
        path = Path(os.environ[OUT_DIR_ENV]) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _gamma_from(text: str):
    if text == "gammastar":
        return GammaStar()
    if text.startswith("periodic:"):
        _, first, dwell = text.split(":")
        return Periodic(as_time(first), as_time(dwell))
    if text.startswith("file:"):
        return load_times(text[5:])
    raise ValueError(f"unknown gamma {text!r}")


def _input_from(text: str) -> InputSignal:
    if text == "zero":
        return InputSignal.zero()
    if text.startswith("ustar:"):
        return u_star(int(text[6:]))
    if text.startswith("file:"):
        return load_signal(text[5:])
    raise ValueError(f"unknown input {text!r}")


# ---------------------------------------------------------------- commands


def _cmd_simulate(p):
    gamma = _gamma_from(p["gamma"])
    sys_ = make_system(p["system"], gamma, p["mode"])
    traj = simulate(sys_, p["t0"], p["x0"], _input_from(p["input"]), p["tend"], engine=p["engine"])
    if (path := _out_path(p["out"])) is not None:
        traj.to_csv(path)
    report = {"t0": str(traj.t0), "t_end": str(traj.t_end), "x0": traj.x0, "x_final": traj.x_final,
              "jumps": len(traj.jumps), "engine": traj.engine}
    return report, True, f"x({float(traj.t_end):g}) = {traj.x_final:.6f} after {len(traj.jumps)} jumps"


def _cmd_cics(p):
    rep, traj = verify.run_cics_violation(p["nmax"], engine=p["engine"])
    if (path := _out_path(p["out"])) is not None:
        traj.to_csv(path)
    n = p["nmax"]
    verdict = f"x(s_N+1/2) >= 1 for N=1..{n}" if rep.passed else rep.summary()
    return rep.to_dict(), rep.passed, verdict


def _cmd_ts(p):
    deltas = [float(d) for d in p["deltas"].split(",")]
    rep = verify.run_ts_violation(deltas, engine=p["engine"])
    verdict = f"not totally stable: |x(s_N+1/2)| >= 1 for every delta in {deltas}" if rep.passed else rep.summary()
    return rep.to_dict(), rep.passed, verdict


def _cmd_iiss(p):
    rho1, rho2 = k_function(p["rho1"]), k_function(p["rho2"])
    rep, w = verify.run_iiss_violation(p["delta1"], p["delta2"], rho1, rho2, engine=p["engine"])
    if (path := _out_path(p["out"])) is not None and w.synthesis is not None:
        exp = w.experiment
        simulate(system_a(GammaStar()), exp.t0, exp.x0, exp.u, exp.t_final, engine=p["engine"]).to_csv(path)
    report = w.report()
    report["pass"] = rep.passed
    report["violations"] = rep.violations
    verdict = (f"|x(t_final)| = {w.x_final:.6f} >= e^-1 with |x0| <= {p['delta1']} and energy {w.energy:.3g} <= {p['delta2']}"
               if rep.passed else rep.summary())
    return report, rep.passed, verdict


def _cmd_falsify(p):
    alpha = k_function(p["alpha"])
    beta0 = (lambda r: 0.0) if p["beta0"] == "zero" else k_function(p["beta0"])
    out = falsify_iiss_candidate(alpha, beta0, k_function(p["rho1"]), k_function(p["rho2"]))
    verdict = (f"candidate refuted with delta={out['delta']:.6g}" if out["violated"]
               else "candidate not refuted")
    return out, out["violated"], verdict


def _cmd_guas(p):
    seqs = verify.default_sequences()
    gus = verify.check_gus(sequences=seqs, horizon=p["horizon"], samples=p["samples"])
    settle = verify.check_settling(sequences=seqs, ks=range(p["kmax"] + 1))
    ok = gus.passed and settle.passed
    return {"gus": gus.to_dict(), "settling": settle.to_dict()}, ok, f"{gus.summary()}; {settle.summary()}"


def _cmd_ubebs(p):
    rep = verify.check_ubebs(p["trials"], p["seed"], p["horizon"])
    return rep.to_dict(), rep.passed, rep.summary()


def _cmd_selftest(p):
    results = {}
    cics, _ = verify.run_cics_violation(6)
    results["cics"] = cics.passed
    results["ts"] = verify.run_ts_violation([0.5, 0.1]).passed
    results["iiss"] = verify.run_iiss_violation(0.3, 0.2)[0].passed
    seqs = verify.default_sequences(until=60)
    results["gus"] = verify.check_gus(t0s=(0, 10), sequences=seqs, horizon=10, samples=50).passed
    results["settling"] = verify.check_settling(t0s=(0, 10), sequences=seqs, ks=range(3)).passed
    results["ubebs"] = verify.check_ubebs(50, 0).passed
    ok = all(results.values())
    return results, ok, ("selftest passed" if ok else f"selftest failed: {[k for k, v in results.items() if not v]}")


COMMANDS = {
    "simulate": _cmd_simulate, "cics": _cmd_cics, "ts": _cmd_ts, "iiss": _cmd_iiss,
    "falsify": _cmd_falsify, "guas": _cmd_guas, "ubebs": _cmd_ubebs, "selftest": _cmd_selftest,
}


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    return verify._json_default(o)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    meta = {"config", "dump_config", "json", "subcommand"}
    flags = {k: v for k, v in vars(ns).items() if k not in meta}
    try:
        raw = {}
        if ns.config:
            raw = parse_config_text(Path(ns.config).read_text())
            file_cmd = raw.pop("subcommand", ns.subcommand)
            if file_cmd != ns.subcommand:
                raise ValueError(f"config is for {file_cmd!r}, not {ns.subcommand!r}")
        raw.update(flags)
        cfg = RunConfig.build(ns.subcommand, raw)
    except (OSError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"impulsive {ns.subcommand}: error: {exc}", file=sys.stderr)
        return 2
    if ns.dump_config:
        Path(ns.dump_config).write_text(cfg.dumps())
    try:
        report, ok, verdict = COMMANDS[cfg.subcommand](cfg.params)
    except ValueError as exc:
        print(f"impulsive {ns.subcommand}: error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, sort_keys=True, indent=2, default=_json_default)
    if ns.json and (path := _out_path(ns.json)) is not None:
        path.write_text(text + "\n")
    else:
        print(text)
    print(verdict, file=sys.stderr)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
