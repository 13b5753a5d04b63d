"""Command line interface and config-driven pipeline.

Exit codes: 0 when every verdict is consistent, 2 when a report refutes a
hypothesis, 1 on errors or inconsistent verdicts.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import chain, chaos, entropy, generators, modelbuild, symbolic
from .core import FiniteMetricSystem, MetricSystemError

log = logging.getLogger("topodyn")

EXIT_OK, EXIT_ERROR, EXIT_REFUTED = 0, 1, 2
ANALYSES = ("chain", "sen", "entropy", "horseshoe", "model", "thm11", "thm12", "appendix")


class ConfigError(ValueError):
    pass


def distance(text) -> Fraction:
    """Parse ``0.25``, ``1/4`` or ``2^-2``."""
    s = str(text).strip()
    try:
        if s.startswith("2^"):
            return Fraction(2) ** int(s[2:])
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a distance: {text!r}") from None


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- system files ------------------------------------------------------------------------------


def system_to_json(system: FiniteMetricSystem, subsets: dict | None = None) -> str:
    d = system.dist
    data = {
        "name": system.name,
        "states": list(system.labels),
        "metric": [[repr(float(d[i, j])) for j in range(i)] for i in range(system.n)],
        "map": [int(x) for x in system.perm],
        "subsets": {k: sorted(int(x) for x in v) for k, v in (subsets or {}).items()},
    }
    if system.meta.get("discrete"):
        data["discrete"] = True
    return json.dumps(data, indent=1) + "\n"


def system_from_json(text: str, tol: float | None = None) -> tuple[FiniteMetricSystem, dict]:
    data = json.loads(text)
    for key in ("states", "metric", "map"):
        if key not in data:
            raise ConfigError(f"system file lacks {key!r}")
    metric = data["metric"]
    if isinstance(metric, dict):
        system = generators.generate(metric["generator"], **metric.get("params", {}))
    else:
        states = data["states"]
        n = states if isinstance(states, int) else len(states)
        labels = None if isinstance(states, int) else [str(s) for s in states]
        rows = [[float(Fraction(str(v))) for v in row] for row in metric]
        if len(rows) != n:
            raise ConfigError(f"metric has {len(rows)} rows for {n} states")
        table = [[0.0] * n for _ in range(n)]
        for i, row in enumerate(rows):
            if len(row) not in (i, i + 1):
                raise ConfigError(f"metric row {i} has {len(row)} entries")
            for j, v in enumerate(row[:i]):
                table[i][j] = table[j][i] = v
        kw = {"tol": tol} if tol is not None else {}
        meta = {"discrete": True} if data.get("discrete") else None
        system = FiniteMetricSystem(table, data["map"], labels, name=data.get("name", "system"), meta=meta, **kw)
    subsets = {k: frozenset(_resolve_states(system, v)) for k, v in data.get("subsets", {}).items()}
    return system, subsets


def _resolve_states(system, items):
    out = []
    for v in items:
        out.append(v if isinstance(v, int) else system.state_of(str(v)))
    return out


@dataclass
class Loaded:
    system: object
    lam: object = None
    label: str = ""


def _shift(name: str) -> symbolic.SubshiftSystem:
    table = {"full": symbolic.full_shift(2), "golden": symbolic.golden_mean(), "one-point": symbolic.one_point(0, 2)}
    if name.startswith("full-"):
        return symbolic.full_shift(int(name[5:]))
    if name not in table:
        raise ConfigError(f"unknown shift {name!r}")
    return table[name]


def _params(text: str) -> dict:
    out = {}
    for part in filter(None, text.split(",")):
        k, _, v = part.partition("=")
        out[k.strip()] = int(v) if v.strip().lstrip("-").isdigit() else float(v)
    return out


def load_system(spec: str, tol: float | None = None) -> Loaded:
    """``file.json``, ``file.sft``, ``gen:NAME:k=v,...`` or ``shift:NAME``."""
    if spec.startswith("gen:"):
        _, name, *rest = spec.split(":")
        params = _params(rest[0] if rest else "")
        if name == "cantor_fan":
            system, lam = generators.cantor_fan(**params)
            return Loaded(system, lam, spec)
        return Loaded(generators.generate(name, **params), None, spec)
    if spec.startswith("shift:"):
        return Loaded(_shift(spec[6:]), None, spec)
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"no such system file: {spec}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".sft":
        return Loaded(symbolic.parse_sft(text, name=path.stem), None, spec)
    system, subsets = system_from_json(text, tol)
    return Loaded(system, subsets.get("lambda"), spec)


# -- pipeline -------------------------------------------------------------------------------------


@dataclass
class Outcome:
    files: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        v = set(self.verdicts.values())
        if "INCONSISTENT" in v:
            return EXIT_ERROR
        if "HYPOTHESIS FAILS" in v:
            return EXIT_REFUTED
        return EXIT_OK


def _fractions(values, default):
    return tuple(distance(v) for v in values) if values is not None else default


def read_config(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    unknown = [a for a in cfg.get("analyses", []) if a not in ANALYSES]
    if unknown:
        raise ConfigError(f"unknown analyses: {unknown} (known: {', '.join(ANALYSES)})")
    return cfg


def _system_from_config(cfg: dict, base: Path, tol) -> Loaded:
    sec = cfg.get("system", {})
    if "generator" in sec:
        params = dict(sec.get("params", {}))
        name = sec["generator"]
        if name == "cantor_fan":
            system, lam = generators.cantor_fan(**params)
        else:
            system, lam = generators.generate(name, **params), None
        loaded = Loaded(system, lam, name)
    elif "shift" in sec:
        loaded = Loaded(_shift(sec["shift"]), None, sec["shift"])
    elif "sft" in sec:
        p = base / sec["sft"]
        loaded = Loaded(symbolic.parse_sft(p.read_text(encoding="utf-8"), name=p.stem), None, str(p))
    elif "file" in sec:
        loaded = load_system(str(base / sec["file"]), tol)
    elif not cfg.get("analyses"):
        return Loaded(None)
    else:
        raise ConfigError("[system] needs one of generator, shift, sft or file")
    if "lambda_shift" in sec:
        loaded.lam = _shift(sec["lambda_shift"])
    elif "lambda_sft" in sec:
        p = base / sec["lambda_sft"]
        loaded.lam = symbolic.parse_sft(p.read_text(encoding="utf-8"), name=p.stem)
    elif "lambda" in sec and isinstance(loaded.system, FiniteMetricSystem):
        loaded.lam = frozenset(_resolve_states(loaded.system, sec["lambda"]))
    return loaded


def run_pipeline(config: Path, out_dir: Path, *, tolerance: float | None = None, seed: int | None = None) -> Outcome:
    cfg = read_config(config)
    sch = cfg.get("schedule", {})
    loaded = _system_from_config(cfg, config.parent, tolerance)
    out = Outcome()

    def emit(name, text):
        path = out_dir / name
        write_atomic(path, text)
        out.files.append(path)

    S = loaded.system
    period = int(sch.get("truncation_period", 6))
    finite = symbolic.truncation(S, period) if isinstance(S, symbolic.SubshiftSystem) else S
    deltas = _fractions(sch.get("delta"), (Fraction(1, 4), Fraction(1, 8)))
    a = float(distance(sch.get("a", "1/2")))
    for name in cfg.get("analyses", []):
        log.info("analysis %s", name)
        if name == "chain":
            emit("chain_cr.csv", chain.cr_table_csv(finite, [float(d) for d in deltas]))
            emit("chain.dot", chain.condensation_dot(chain.chain_graph(finite, float(min(deltas))), finite.name))
        elif name == "sen":
            rep = chaos.sensitive_points(finite, loaded.lam if not isinstance(S, symbolic.SubshiftSystem) else None, a)
            lines = [f"a = {a}", f"|Sen_a| = {len(rep.sensitive)}"] + [
                f"{finite.labels[x]} <- {finite.labels[w.y]} at step {w.step}" for x, w in sorted(rep.witnesses.items())
            ]
            emit("sen.txt", "\n".join(lines) + "\n")
        elif name == "entropy":
            n_max = int(sch.get("n_max", 12))
            rs = [float(r) for r in _fractions(sch.get("r"), (Fraction(1, 2),))]
            fin = symbolic.truncation(S, max(n_max, period)) if isinstance(S, symbolic.SubshiftSystem) else S
            K = loaded.lam if isinstance(S, FiniteMetricSystem) and loaded.lam is not None and sch.get("entropy_on_lambda") else None
            rep = entropy.entropy_estimate(fin, K, rs, n_max)
            emit("entropy.csv", rep.csv())
            rows = ["r,slope,residual"] + [f"{r!r},{s!r},{rep.residuals[r]!r}" for r, s in rep.slopes.items()]
            if isinstance(S, symbolic.SubshiftSystem):
                rows.append(f"exact,{entropy.sft_entropy(S)!r},0.0")
            emit("entropy_slopes.csv", "\n".join(rows) + "\n")
        elif name == "horseshoe":
            cert = chaos.horseshoe_certificate(
                S, loaded.lam, float(distance(sch.get("eps", "1/4"))), float(distance(sch.get("horseshoe_a", "1"))),
                truncation_period=period,
            )
            emit("horseshoe.json", cert.to_json())
        elif name == "model":
            if isinstance(S, symbolic.SubshiftSystem):
                lam = loaded.lam if loaded.lam is not None else S
                c = sch.get("c")
                model = modelbuild.build_sft_model(S, lam, n=sch.get("n"), c=distance(c[0]) if c else None)
                emit("model.txt", model.summary() + "W: " + " ".join("".join(map(str, w)) for w in sorted(model.W)) + "\n")
            else:
                c = float(distance((sch.get("c") or ["1/2"])[0]))
                fm = modelbuild.build_finite_model(S, loaded.lam or frozenset(S.states), c)
                emit("model.txt", f"|Gamma_c| = {len(fm.Gamma)}\nunique = {fm.unique}\nlocally maximal = {fm.locally_maximal}\n")
        elif name == "thm11":
            family = _family(loaded, sch)
            rep = chain.theorem_1_1_verify(family, a, [float(d) for d in deltas], int(sch.get("growth_threshold", 64)))
            emit("thm11.txt", rep.text())
            out.verdicts["thm11"] = rep.verdict
        elif name == "thm12":
            schedule = modelbuild.Schedule(
                eps=_fractions(sch.get("eps_ladder"), modelbuild.Schedule.eps),
                delta=deltas,
                c=_fractions(sch.get("c"), modelbuild.Schedule.c),
                b=_fractions(sch.get("b"), modelbuild.Schedule.b),
                e=_fractions(sch.get("e"), modelbuild.Schedule.e),
                a=a,
                n_max=int(sch.get("n_max", 10)),
                truncation_period=period,
            )
            lam = loaded.lam if loaded.lam is not None else S
            rep = modelbuild.theorem_1_2_verify(S, lam, schedule)
            emit("thm12.txt", rep.text())
            out.verdicts["thm12"] = rep.verdict
        elif name == "appendix":
            rep = chaos.appendix_verify(finite, a, float(distance(sch.get("r", ["1/10"])[0] if isinstance(sch.get("r"), list) else sch.get("r", "1/10"))))
            emit("appendix.txt", rep.text())
    if seed is not None or tolerance is not None:
        emit("provenance.txt", f"seed = {seed}\ntolerance = {tolerance}\nconfig = {config}\n")
    return out


def _family(loaded: Loaded, sch: dict) -> list:
    S = loaded.system
    if isinstance(S, symbolic.SubshiftSystem):
        periods = sch.get("periods", [3, 4, 5, 6, 7, 8])
        return [symbolic.truncation(S, p) for p in periods]
    if "refine_key" in S.meta:
        return chaos.refinements(S, int(sch.get("refine_steps", 2)))
    return [S]


# -- argparse front end ----------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topodyn", description="Chain recurrence, sensitivity and entropy on finite and symbolic systems.")
    p.add_argument("--out-dir", type=Path, default=Path("reports"))
    p.add_argument("--tolerance", type=float, default=None, help="metric comparison tolerance")
    p.add_argument("--seed", type=int, default=None, help="recorded for provenance only")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run a config file")
    r.add_argument("config", type=Path)

    c = sub.add_parser("chain", help="chain components at one or more δ")
    c.add_argument("system")
    c.add_argument("--delta", type=distance, action="append", required=True)
    c.add_argument("--period", type=int, default=6, help="truncation period for subshifts")

    ch = sub.add_parser("chaos", help="sensitivity and horseshoes")
    chs = ch.add_subparsers(dest="what", required=True)
    sen = chs.add_parser("sen")
    sen.add_argument("system")
    sen.add_argument("--a", type=distance, required=True)
    sen.add_argument("--period", type=int, default=6)
    hs = chs.add_parser("horseshoe")
    hs.add_argument("system")
    hs.add_argument("--eps", type=distance, required=True)
    hs.add_argument("--a", type=distance, required=True)
    hs.add_argument("--base", default=None, help="base point, e.g. '(0).(0)'")
    hs.add_argument("--period", type=int, default=6)

    e = sub.add_parser("entropy", help="entropy estimate")
    e.add_argument("system")
    e.add_argument("--r", type=distance, action="append")
    e.add_argument("--nmax", type=int, default=12)

    m = sub.add_parser("model", help="SFT models")
    ms = m.add_subparsers(dest="what", required=True)
    mb = ms.add_parser("build")
    mb.add_argument("ambient")
    mb.add_argument("--lambda", dest="lam", default=None, help="sub-subshift (.sft or shift:NAME)")
    mb.add_argument("--n", type=int, default=None)
    mb.add_argument("--c", type=distance, default=None)

    v = sub.add_parser("verify", help="re-check certificates and theorems")
    vs = v.add_subparsers(dest="what", required=True)
    vc = vs.add_parser("cert")
    vc.add_argument("certificate", type=Path)
    vc.add_argument("--system", default=None)
    vt = vs.add_parser("thm12")
    vt.add_argument("system")
    vt.add_argument("--lambda", dest="lam", default=None)
    vt.add_argument("--schedule", type=Path, default=None, help="TOML file with a [schedule] table")

    g = sub.add_parser("generate", help="write a generated system as JSON")
    g.add_argument("generator")
    g.add_argument("--param", action="append", default=[], help="k=v")
    return p


def _finite(loaded: Loaded, period: int) -> FiniteMetricSystem:
    S = loaded.system
    return symbolic.truncation(S, period) if isinstance(S, symbolic.SubshiftSystem) else S


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except (ConfigError, MetricSystemError, modelbuild.ModelBuildError, chaos.NoSensitivePointError,
            chaos.ShadowSearchError, symbolic.ShadowingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _dispatch(args) -> int:
    out = args.out_dir
    if args.cmd == "run":
        res = run_pipeline(args.config, out, tolerance=args.tolerance, seed=args.seed)
        for f in res.files:
            print(f)
        for k, v in res.verdicts.items():
            print(f"{k}: {v}")
        return res.exit_code
    if args.cmd == "generate":
        params = _params(",".join(args.param))
        if args.generator == "cantor_fan":
            system, lam = generators.cantor_fan(**params)
            text = system_to_json(system, {"lambda": lam})
        else:
            text = system_to_json(generators.generate(args.generator, **params))
        sys.stdout.write(text)
        return EXIT_OK
    if args.cmd == "verify" and args.what == "cert":
        cert = chaos.HorseshoeCertificate.from_json(args.certificate.read_text(encoding="utf-8"))
        system = load_system(args.system, args.tolerance).system if args.system else None
        fails = chaos.verify_certificate(cert, system)
        print("certificate verified" if not fails else "\n".join(f"FAILED: {f}" for f in fails))
        return EXIT_OK if not fails else EXIT_ERROR

    loaded = load_system(args.system if hasattr(args, "system") else args.ambient, args.tolerance)
    if args.cmd == "chain":
        fin = _finite(loaded, args.period)
        sys.stdout.write(chain.cr_table_csv(fin, [float(d) for d in args.delta]))
        write_atomic(out / "chain.dot", chain.condensation_dot(chain.chain_graph(fin, float(min(args.delta))), fin.name))
        return EXIT_OK
    if args.cmd == "chaos" and args.what == "sen":
        fin = _finite(loaded, args.period)
        rep = chaos.sensitive_points(fin, loaded.lam, float(args.a))
        print(f"|Sen_a| = {len(rep.sensitive)} of {fin.n}")
        for x in sorted(rep.sensitive):
            w = rep.witnesses[x]
            print(f"{fin.labels[x]}\twitness {fin.labels[w.y]}\tstep {w.step}")
        return EXIT_OK
    if args.cmd == "chaos" and args.what == "horseshoe":
        base = symbolic.parse_point(args.base) if args.base and isinstance(loaded.system, symbolic.SubshiftSystem) else args.base
        cert = chaos.horseshoe_certificate(loaded.system, loaded.lam, float(args.eps), float(args.a), p=base, truncation_period=args.period)
        write_atomic(out / "horseshoe.json", cert.to_json())
        print(f"m = {cert.m}, k = {cert.k}, bound log2/m = {cert.entropy_bound:.6f}, written {out / 'horseshoe.json'}")
        return EXIT_OK
    if args.cmd == "entropy":
        S = loaded.system
        rs = [float(r) for r in args.r] if args.r else None
        if isinstance(S, symbolic.SubshiftSystem):
            fin = symbolic.truncation(S, args.nmax)
            print(f"exact: {entropy.sft_entropy(S):.9f}")
        else:
            fin = S
        rep = entropy.entropy_estimate(fin, None, rs, args.nmax)
        sys.stdout.write(rep.csv())
        print(f"estimate: {rep.estimate:.6f} ({rep.method})")
        return EXIT_OK
    if args.cmd == "model":
        lam = load_system(args.lam).system if args.lam else loaded.system
        model = modelbuild.build_sft_model(loaded.system, lam, n=args.n, c=args.c)
        sys.stdout.write(model.summary())
        print("W:", " ".join("".join(map(str, w)) for w in sorted(model.W)))
        print(symbolic.format_sft(model.Xi), end="")
        return EXIT_OK
    if args.cmd == "verify" and args.what == "thm12":
        sch = modelbuild.Schedule()
        if args.schedule:
            with open(args.schedule, "rb") as fh:
                raw = tomllib.load(fh).get("schedule", {})
            sch = modelbuild.Schedule(
                eps=_fractions(raw.get("eps_ladder"), sch.eps), delta=_fractions(raw.get("delta"), sch.delta),
                c=_fractions(raw.get("c"), sch.c), b=_fractions(raw.get("b"), sch.b), e=_fractions(raw.get("e"), sch.e),
            )
        lam = load_system(args.lam).system if args.lam else loaded.lam
        if lam is None:
            raise ConfigError("no Λ given (use --lambda or a system file with a 'lambda' subset)")
        rep = modelbuild.theorem_1_2_verify(loaded.system, lam, sch)
        sys.stdout.write(rep.text())
        return rep.exit_code
    raise ConfigError(f"unhandled command {args.cmd}")


if __name__ == "__main__":
    sys.exit(main())
