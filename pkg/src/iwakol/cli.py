"""Command line entry point: scenario runner, battery, task shortcuts.

A scenario is a JSON document (schema version 1, see docs/schema.md)
that fixes the coefficient ring, the parameter system, the working
depths, the deformation data, the synthetic system, a mandatory rng
seed, and a list of tasks. Reports are JSON with sorted keys, so a
given (config, seed) pair always produces identical bytes; timing data
is opt-in through --timings precisely because it would break that.

Exit codes: 0 success, 1 invariant failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import os
import random
import sys
import time

from . import __version__
from .coeff import CoeffRing
from .euler import generate_multiplicative, verify_all_norm_relations
from .fitting import (
    LinearElement,
    PresentedModule,
    StructureData,
    estimate_local_exponent,
    specialization_length,
)
from .galois import DeformationData
from .kolyvagin import (
    CongruenceError,
    NormImageError,
    c_i_ladder,
    check_level_compat,
    check_mps_independence,
    derivative_class,
    scalar_extension_check,
    universal_kolyvagin,
    weak_specialization,
)
from .lam import MonicParameterSystem, QuotientRing
from .verify import FAULT_TARGETS, QUICK_CHECKS, verify_suite

THREAD_ENV = "IWAKOL_THREADS"

SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Schema or usage problem; maps to exit code 2."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"config error at {path}: {message}")


# ---------------------------------------------------------------------------
# validation helpers; every reader carries the JSON path for diagnostics


def _obj(v, path):
    if not isinstance(v, dict):
        raise ConfigError(path, "expected an object")
    return v


def _arr(v, path, minlen=0):
    if not isinstance(v, list):
        raise ConfigError(path, "expected an array")
    if len(v) < minlen:
        raise ConfigError(path, f"expected at least {minlen} entries")
    return v


def _int(v, path, lo=None):
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(path, "expected an integer")
    if lo is not None and v < lo:
        raise ConfigError(path, f"expected a value >= {lo}")
    return v


def _str(v, path, allowed=None):
    if not isinstance(v, str):
        raise ConfigError(path, "expected a string")
    if allowed is not None and v not in allowed:
        raise ConfigError(path, f"expected one of {', '.join(allowed)}")
    return v


def _get(obj, key, path, required=True, default=None):
    if key not in obj:
        if required:
            raise ConfigError(path, f"missing required field {key!r}")
        return default
    return obj[key]


def _poly(v, r, O, path):
    """A sparse polynomial: [{"coeff": int, "exps": [e1..er]}, ...]."""
    out = {}
    for k, term in enumerate(_arr(v, path)):
        tpath = f"{path}[{k}]"
        term = _obj(term, tpath)
        c = _int(_get(term, "coeff", tpath), f"{tpath}.coeff")
        exps = _arr(_get(term, "exps", tpath), f"{tpath}.exps")
        if len(exps) != r:
            raise ConfigError(f"{tpath}.exps",
                              f"expected {r} exponents, got {len(exps)}")
        mono = tuple(_int(e, f"{tpath}.exps[{j}]", lo=0)
                     for j, e in enumerate(exps))
        prev = out.get(mono, O.zero)
        out[mono] = prev + O.from_int(c)
    return out


def _extension(v, path):
    if v is None:
        return None
    v = _arr(v, path, minlen=2)
    kind = _str(v[0], f"{path}[0]", allowed=("unramified", "eisenstein"))
    coeffs = tuple(_int(c, f"{path}[1][{j}]")
                   for j, c in enumerate(_arr(v[1], f"{path}[1]", minlen=2)))
    return (kind, coeffs)


def _depth_vec(v, path, r):
    v = _arr(v, path)
    if len(v) != r + 1:
        raise ConfigError(path, f"expected {r + 1} depth entries")
    return tuple(_int(e, f"{path}[{j}]", lo=1) for j, e in enumerate(v))


# ---------------------------------------------------------------------------
# scenario assembly

_OPS = ("fitting", "asymptotics", "cideal", "check", "kolyvagin", "verify")

_NEEDS_SYSTEM = ("cideal", "check", "kolyvagin")


def load_config(path):
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise ConfigError("$", f"cannot read {path}: {e}")
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ConfigError("$", f"not valid JSON: {e}")
    return cfg, hashlib.sha256(raw).hexdigest()


def build_scenario(cfg):
    """Validate the document and construct the algebraic objects."""
    cfg = _obj(cfg, "$")
    version = _int(_get(cfg, "version", "$"), "$.version")
    if version != SCHEMA_VERSION:
        raise ConfigError("$.version",
                          f"unsupported schema version {version}")
    seed = _int(_get(cfg, "seed", "$"), "$.seed")

    co = _obj(_get(cfg, "coefficients", "$"), "$.coefficients")
    p = _int(_get(co, "p", "$.coefficients"), "$.coefficients.p", lo=2)
    prec = _int(_get(co, "precision", "$.coefficients"),
                "$.coefficients.precision", lo=1)
    ext = _extension(_get(co, "extension", "$.coefficients", required=False),
                     "$.coefficients.extension")
    try:
        O = CoeffRing(p, prec, ext) if ext else CoeffRing(p, prec)
    except (ValueError, ArithmeticError) as e:
        raise ConfigError("$.coefficients", str(e))

    r = _int(_get(cfg, "r", "$"), "$.r", lo=0)
    mp = _obj(_get(cfg, "mps", "$"), "$.mps")
    h0_raw = _get(mp, "h0", "$.mps", required=False)
    h0 = O.uniformizer if h0_raw is None else O.from_int(
        _int(h0_raw, "$.mps.h0"))
    polys_raw = _arr(_get(mp, "polys", "$.mps"), "$.mps.polys")
    if len(polys_raw) != r:
        raise ConfigError("$.mps.polys", f"expected {r} polynomials")
    hs = [_poly(v, r, O, f"$.mps.polys[{j}]")
          for j, v in enumerate(polys_raw)]
    try:
        mps = MonicParameterSystem(O, h0, hs)
    except (ValueError, ArithmeticError) as e:
        raise ConfigError("$.mps", str(e))

    depths = _depth_vec(_get(cfg, "depths", "$"), "$.depths", r)
    try:
        ring = QuotientRing(mps, depths)
    except (ValueError, ArithmeticError) as e:
        raise ConfigError("$.depths", str(e))

    tasks = _arr(_get(cfg, "tasks", "$"), "$.tasks", minlen=1)
    ops = []
    for k, t in enumerate(tasks):
        t = _obj(t, f"$.tasks[{k}]")
        ops.append(_str(_get(t, "op", f"$.tasks[{k}]"),
                        f"$.tasks[{k}].op", allowed=_OPS))

    es = data = None
    if any(op in _NEEDS_SYSTEM for op in ops):
        de = _obj(_get(cfg, "deformation", "$"), "$.deformation")
        dim = _int(_get(de, "dim", "$.deformation"),
                   "$.deformation.dim", lo=1)
        mats_raw = _obj(_get(de, "matrices", "$.deformation"),
                        "$.deformation.matrices")
        frob = {}
        for key, m in mats_raw.items():
            mpath = f"$.deformation.matrices.{key}"
            try:
                ell = int(key)
            except ValueError:
                raise ConfigError(mpath, "prime keys must be integers")
            m = _arr(m, mpath, minlen=dim)
            frob[ell] = [[_poly(e, r, O, f"{mpath}[{a}][{b}]")
                          for b, e in enumerate(_arr(row, f"{mpath}[{a}]",
                                                     minlen=dim))]
                         for a, row in enumerate(m)]
        twist_raw = _obj(_get(de, "twist", "$.deformation", required=False,
                              default={}), "$.deformation.twist")
        twist = {int(k): _int(v, f"$.deformation.twist.{k}")
                 for k, v in twist_raw.items()}
        name = _str(_get(de, "name", "$.deformation", required=False,
                         default="scenario"), "$.deformation.name")
        try:
            data = DeformationData(O, r, dim, frob, twist=twist, name=name)
        except (ValueError, ArithmeticError) as e:
            raise ConfigError("$.deformation", str(e))

        eu = _obj(_get(cfg, "euler", "$"), "$.euler")
        flavor = _str(_get(eu, "flavor", "$.euler", required=False,
                           default="direct"), "$.euler.flavor",
                      allowed=("direct", "dual"))
        primes = [_int(q, f"$.euler.primes[{j}]", lo=2) for j, q in
                  enumerate(_arr(_get(eu, "primes", "$.euler"),
                                 "$.euler.primes", minlen=1))]
        missing = [q for q in primes if q not in frob]
        if missing:
            raise ConfigError("$.euler.primes",
                              f"no Frobenius matrix for {missing}")
        base_raw = _arr(_get(eu, "base", "$.euler"), "$.euler.base",
                        minlen=1)
        base = [ring.from_poly(_poly(v, r, O, f"$.euler.base[{j}]"))
                for j, v in enumerate(base_raw)]
        own_raw = _get(eu, "own_exponents", "$.euler", required=False)
        own = None
        if own_raw is not None:
            own = {int(k): _int(v, f"$.euler.own_exponents.{k}")
                   for k, v in _obj(own_raw, "$.euler.own_exponents").items()}
        try:
            es = generate_multiplicative(data, ring, primes, base,
                                         flavor=flavor, own_exponents=own)
        except (ValueError, ArithmeticError) as e:
            raise ConfigError("$.euler", str(e))

    return {"seed": seed, "O": O, "mps": mps, "ring": ring, "depths": depths,
            "data": data, "es": es, "tasks": tasks}


# ---------------------------------------------------------------------------
# task execution


def _gens(ideal):
    return [str(g) for g in ideal.reduced_generators()]


def _task_ring(env, task, path):
    d = _get(task, "depths", path, required=False)
    if d is None:
        return env["ring"]
    return QuotientRing(env["mps"], _depth_vec(d, f"{path}.depths",
                                               env["mps"].r))


def _run_fitting(env, task, path, rng):
    R = _task_ring(env, task, path)
    struct = _get(task, "structure", path, required=False)
    if struct is not None:
        fs = [R.from_poly(_poly(v, R.r, env["O"], f"{path}.structure[{j}]"))
              for j, v in enumerate(_arr(struct, f"{path}.structure",
                                         minlen=1))]
        sd = StructureData(R, fs)
        s = len(fs)
        table = {i: _gens(sd.fitting(i)) for i in range(s + 1)}
        return True, {"source": "structure", "s": s, "table": table}
    pres = _obj(_get(task, "presentation", path), f"{path}.presentation")
    ngens = _int(_get(pres, "ngens", f"{path}.presentation"),
                 f"{path}.presentation.ngens", lo=1)
    rows_raw = _arr(_get(pres, "rows", f"{path}.presentation"),
                    f"{path}.presentation.rows", minlen=1)
    rows = []
    for a, row in enumerate(rows_raw):
        row = _arr(row, f"{path}.presentation.rows[{a}]", minlen=ngens)
        rows.append([R.from_poly(_poly(
            e, R.r, env["O"], f"{path}.presentation.rows[{a}][{b}]"))
            for b, e in enumerate(row)])
    pm = PresentedModule(R, ngens, rows)
    table = {i: _gens(pm.fitting_ideal(i)) for i in range(ngens + 1)}
    return True, {"source": "presentation", "ngens": ngens, "table": table}


def _run_asymptotics(env, task, path, rng):
    O = env["O"]
    g = _poly(_get(task, "g", path), 1, O, f"{path}.g")
    direction = _str(_get(task, "direction", path, required=False,
                          default="unit"), f"{path}.direction",
                     allowed=("unit", "pi"))
    levels = [_int(N, f"{path}.levels[{j}]", lo=1) for j, N in
              enumerate(_arr(_get(task, "levels", path), f"{path}.levels",
                             minlen=2))]
    lengths = {}
    series = []
    capped_any = False
    for N in levels:
        ln, capped = specialization_length(O, g, direction, N)
        lengths[N] = ln
        series.append(ln)
        capped_any = capped_any or capped
    slope, stable = estimate_local_exponent(series)
    return True, {"direction": direction, "lengths": lengths,
                  "alpha": slope, "stable": stable, "capped": capped_any}


def _run_cideal(env, task, path, rng):
    i = _int(_get(task, "i", path), f"{path}.i", lo=0)
    floors = [_depth_vec(v, f"{path}.floors[{j}]", env["mps"].r)
              for j, v in enumerate(_arr(_get(task, "floors", path),
                                         f"{path}.floors", minlen=1))]
    pool = _get(task, "pool", path, required=False)
    if pool is not None:
        pool = tuple(_int(q, f"{path}.pool[{j}]", lo=2)
                     for j, q in enumerate(_arr(pool, f"{path}.pool")))
    ladder = c_i_ladder(env["es"], env["mps"], i, floors, pool=pool)
    return True, {"i": i, "ladder": ladder.to_json()}


def _run_check(env, task, path, rng):
    kind = _str(_get(task, "kind", path), f"{path}.kind",
                allowed=("level-compat", "mps-independence",
                         "scalar-extension", "weak-specialization"))
    es, mps, O = env["es"], env["mps"], env["O"]
    r = mps.r
    if kind == "level-compat":
        m = _depth_vec(_get(task, "m", path), f"{path}.m", r)
        mp = _depth_vec(_get(task, "mprime", path), f"{path}.mprime", r)
        n = _int(_get(task, "n", path), f"{path}.n", lo=1)
        out = check_level_compat(es, mps, m, mp, n)
    elif kind == "mps-independence":
        alt_raw = _obj(_get(task, "alternative", path),
                       f"{path}.alternative")
        h0_raw = _get(alt_raw, "h0", f"{path}.alternative", required=False)
        h0 = O.uniformizer if h0_raw is None else O.from_int(
            _int(h0_raw, f"{path}.alternative.h0"))
        polys = [_poly(v, r, O, f"{path}.alternative.polys[{j}]")
                 for j, v in enumerate(_arr(
                     _get(alt_raw, "polys", f"{path}.alternative"),
                     f"{path}.alternative.polys", minlen=r))]
        alt = MonicParameterSystem(O, h0, polys)
        i = _int(_get(task, "i", path), f"{path}.i", lo=0)
        depths = [_int(N, f"{path}.schedule[{j}]", lo=1) for j, N in
                  enumerate(_arr(_get(task, "schedule", path),
                                 f"{path}.schedule", minlen=2))]
        pool = tuple(_int(q, f"{path}.pool[{j}]", lo=2) for j, q in
                     enumerate(_arr(_get(task, "pool", path),
                                    f"{path}.pool", minlen=1)))
        out = check_mps_independence(es, alt, i, depths, pool=pool)
    elif kind == "scalar-extension":
        ext = _extension(_get(task, "extension", path), f"{path}.extension")
        if ext is None:
            raise ConfigError(f"{path}.extension", "an extension is required")
        O2 = CoeffRing(O.p, O.cap, ext)
        i = _int(_get(task, "i", path), f"{path}.i", lo=0)
        floors = [_depth_vec(v, f"{path}.floors[{j}]", r)
                  for j, v in enumerate(_arr(_get(task, "floors", path),
                                             f"{path}.floors", minlen=1))]
        pool = tuple(_int(q, f"{path}.pool[{j}]", lo=2) for j, q in
                     enumerate(_arr(_get(task, "pool", path),
                                    f"{path}.pool", minlen=1)))
        out = scalar_extension_check(es, O2, i, floors, pool=pool)
    else:
        coeffs = [_int(c, f"{path}.h[{j}]") for j, c in
                  enumerate(_arr(_get(task, "h", path), f"{path}.h",
                                 minlen=r + 1))]
        h = LinearElement(O, coeffs)
        i = _int(_get(task, "i", path), f"{path}.i", lo=0)
        depths = [_int(N, f"{path}.schedule[{j}]", lo=1) for j, N in
                  enumerate(_arr(_get(task, "schedule", path),
                                 f"{path}.schedule", minlen=2))]
        pool = tuple(_int(q, f"{path}.pool[{j}]", lo=2) for j, q in
                     enumerate(_arr(_get(task, "pool", path),
                                    f"{path}.pool", minlen=1)))
        out = weak_specialization(es, h, i, depths, pool=pool)
        ok = all(e["containment"] for e in out["entries"])
        return ok, {"kind": kind, "report": out}
    return bool(out["ok"]), {"kind": kind, "report": out}


def _run_kolyvagin(env, task, path, rng):
    what = _str(_get(task, "what", path, required=False,
                     default="universal"), f"{path}.what",
                allowed=("universal", "kappa", "norm-relations"))
    if what == "norm-relations":
        results = verify_all_norm_relations(env["es"])
        ok = all(good for _, _, good in results)
        return ok, {"what": what,
                    "relations": [[n, ell, good]
                                  for n, ell, good in results]}
    n = _int(_get(task, "n", path), f"{path}.n", lo=1)
    floor = _depth_vec(_get(task, "floor", path), f"{path}.floor",
                       env["mps"].r)
    I = QuotientRing(env["mps"], floor)
    if what == "universal":
        values = universal_kolyvagin(env["es"], n, I)
        return True, {"what": what, "n": n, "floor": list(floor),
                      "values": [str(v) for v in values]}
    dc = derivative_class(env["es"], n, I)
    return True, {"what": what, "n": n, "floor": list(floor),
                  "kappa": [str(v) for v in dc.kappa]}


def _run_verify_task(env, task, path, rng):
    quick = bool(_get(task, "quick", path, required=False, default=True))
    report = verify_suite(seed=rng.randrange(2**32), quick=quick)
    return report["ok"], {"quick": quick, "report": report}


_EXECUTORS = {
    "fitting": _run_fitting,
    "asymptotics": _run_asymptotics,
    "cideal": _run_cideal,
    "check": _run_check,
    "kolyvagin": _run_kolyvagin,
    "verify": _run_verify_task,
}


def _execute(env, index, task, child_seed, timings):
    path = f"$.tasks[{index}]"
    op = task["op"]
    rng = random.Random(child_seed)
    start = time.perf_counter()
    try:
        ok, result = _EXECUTORS[op](env, task, path, rng)
        entry = {"index": index, "op": op, "ok": ok, "result": result}
    except (ArithmeticError, CongruenceError, NormImageError,
            AssertionError) as e:
        entry = {"index": index, "op": op, "ok": False,
                 "invariant": str(e) or e.__class__.__name__}
    except (ValueError, KeyError) as e:
        raise ConfigError(path, str(e))
    if timings:
        entry["seconds"] = round(time.perf_counter() - start, 6)
    return entry


def run_scenario(cfg, sha, threads=1, timings=False, only_op=None):
    env = build_scenario(cfg)
    tasks = list(enumerate(env["tasks"]))
    if only_op is not None:
        tasks = [(k, t) for k, t in tasks if t["op"] == only_op]
        if not tasks:
            raise ConfigError("$.tasks", f"no {only_op!r} task in config")
    top = random.Random(env["seed"])
    child = {k: top.randrange(2**32) for k, _ in tasks}
    if threads > 1 and len(tasks) > 1:
        with concurrent.futures.ThreadPoolExecutor(threads) as pool:
            futures = [pool.submit(_execute, env, k, t, child[k], timings)
                       for k, t in tasks]
            entries = [f.result() for f in futures]
    else:
        entries = [_execute(env, k, t, child[k], timings) for k, t in tasks]
    entries.sort(key=lambda e: e["index"])
    return {
        "kind": "run",
        "version": __version__,
        "schema": SCHEMA_VERSION,
        "config_sha256": sha,
        "seed": env["seed"],
        "tasks": entries,
        "ok": all(e["ok"] for e in entries),
    }


# ---------------------------------------------------------------------------
# wiring


def _emit(report, out_path):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _thread_count(args):
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise ConfigError("--threads", "must be at least 1")
        return args.threads
    env = os.environ.get(THREAD_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(THREAD_ENV, f"not an integer: {env!r}")
        if n < 1:
            raise ConfigError(THREAD_ENV, "must be at least 1")
        return n
    return 1


def _cmd_run(args, only_op=None):
    cfg, sha = load_config(args.config)
    report = run_scenario(cfg, sha, threads=_thread_count(args),
                          timings=args.timings, only_op=only_op)
    _emit(report, args.out)
    if not report["ok"]:
        for e in report["tasks"]:
            if not e["ok"]:
                name = e.get("invariant", "reported check failure")
                print(f"invariant failed in task {e['index']} "
                      f"({e['op']}): {name}", file=sys.stderr)
        return 1
    return 0


def _cmd_verify(args):
    start = time.perf_counter()
    report = verify_suite(seed=args.seed, quick=args.quick, fault=args.fault)
    if args.timings:
        report["seconds"] = round(time.perf_counter() - start, 6)
    _emit(report, args.out)
    if not report["ok"]:
        for c in report["checks"]:
            if not c["ok"]:
                print(f"invariant failed: {c['name']}", file=sys.stderr)
        return 1
    return 0


def _add_run_flags(sp):
    sp.add_argument("config", help="scenario JSON (see docs/schema.md)")
    sp.add_argument("--out", help="write the report here instead of stdout")
    sp.add_argument("--threads", type=int, default=None,
                    help=f"task-level parallelism (or set {THREAD_ENV})")
    sp.add_argument("--timings", action="store_true",
                    help="include wall-clock timings; breaks byte "
                         "reproducibility")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="iwakol",
        description="Iwasawa-algebra quotients, Kolyvagin derivatives, "
                    "and derived ideal ladders at finite precision.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="execute every task in a scenario")
    _add_run_flags(sp)

    sp = sub.add_parser(
        "verify",
        help="run the invariant battery",
        epilog="--quick keeps the cheap subset: "
               + ", ".join(QUICK_CHECKS) + ". "
               "--fault targets: " + ", ".join(FAULT_TARGETS) + ".")
    sp.add_argument("--quick", action="store_true",
                    help="cheap subset only (see below)")
    sp.add_argument("--seed", type=int, default=0,
                    help="seed for the randomized checks")
    sp.add_argument("--fault", default=None,
                    help="corrupt one named check; it must then fail")
    sp.add_argument("--timings", action="store_true",
                    help="include total wall-clock time; breaks byte "
                         "reproducibility")
    sp.add_argument("--out", help="write the report here instead of stdout")

    for op in ("fitting", "asymptotics", "cideal", "check", "kolyvagin"):
        sp = sub.add_parser(op, help=f"run only the {op} tasks of a scenario")
        _add_run_flags(sp)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_run(args, only_op=args.command)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
