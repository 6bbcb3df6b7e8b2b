"""Command-line front end: ``gen``, ``run`` and ``verify``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Optional, Sequence

from .distributions import SIGMA_MODES, VARIANTS, Instance, make_params, sample
from .errors import BandwidthExceeded, ConfigError, LayoutRequired, Overflow
from .model import Graph, run_protocol
from .oracles import is_mis, matching_score, max_matching_size
from .protocols import ProtocolSpec
from .suites import SUITES, run_suite

EXIT_OK, EXIT_SUITE, EXIT_CONFIG, EXIT_OVERFLOW, EXIT_BANDWIDTH = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    command: str
    k: int = 1
    r: int = 1
    variant: str = "mis"
    toy_f: Optional[tuple[int, ...]] = None
    toy_p: Optional[tuple[int, ...]] = None
    sigma_mode: str = "full"
    protocol: Optional[str] = None
    seed: int = 0
    trials: Optional[int] = None
    format: str = "json"
    out: Optional[str] = None
    suite: Optional[str] = None
    instance: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for key in ("toy_f", "toy_p"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        kw = {k: v for k, v in d.items() if k in known}
        for key in ("toy_f", "toy_p"):
            if kw.get(key) is not None:
                kw[key] = tuple(kw[key])
        return cls(**kw)

    def validate(self) -> "RunConfig":
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.sigma_mode not in SIGMA_MODES:
            raise ConfigError(f"sigma mode must be one of {SIGMA_MODES}")
        if self.k < 1 or self.r < 0:
            raise ConfigError("need k >= 1 and r >= 0")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.trials is not None and self.trials < 1:
            raise ConfigError("trials must be positive")
        if (self.toy_f is None) != (self.toy_p is None):
            raise ConfigError("--toy-f and --toy-p go together")
        if self.command == "run" and not self.protocol:
            raise ConfigError("run needs --protocol")
        if self.command == "verify" and self.suite not in SUITES:
            raise ConfigError(f"suite must be one of {SUITES}")
        if self.protocol:
            ProtocolSpec.parse(self.protocol)
        return self

    def params(self):
        toy = None
        if self.toy_f is not None:
            toy = (_unwrap(self.toy_f), _unwrap(self.toy_p))
        return make_params(self.k, self.r, toy=toy, variant=self.variant)


def _unwrap(xs: tuple[int, ...]):
    return xs[0] if len(xs) == 1 else xs


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected INT[,INT...], got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blackboard", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--variant", choices=VARIANTS, default="mis")
    common.add_argument("--k", type=int, default=1)
    common.add_argument("--r", type=int, default=1)
    common.add_argument("--toy-f", type=_int_list)
    common.add_argument("--toy-p", type=_int_list)
    common.add_argument("--sigma-mode", choices=SIGMA_MODES)
    common.add_argument("--protocol")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out")
    sub.add_parser("gen", parents=[common], help="sample a hard instance and write it as JSON")
    run = sub.add_parser("run", parents=[common], help="run a protocol and report validity or matching quality")
    run.add_argument("--instance", help="instance or graph JSON; without it each trial samples a fresh instance")
    ver = sub.add_parser("verify", parents=[common], help="run a verification suite")
    ver.add_argument("--suite", choices=SUITES, default="all")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    sigma = ns.sigma_mode or ("blocks" if ns.command == "verify" else "full")
    return RunConfig(
        command=ns.command,
        k=ns.k,
        r=ns.r,
        variant=ns.variant,
        toy_f=ns.toy_f,
        toy_p=ns.toy_p,
        sigma_mode=sigma,
        protocol=ns.protocol,
        seed=ns.seed,
        trials=ns.trials,
        format=ns.format,
        out=ns.out,
        suite=getattr(ns, "suite", None),
        instance=getattr(ns, "instance", None),
    ).validate()


def _kv_csv(record: dict[str, Any]) -> str:
    buf = io.StringIO()
    buf.write("schema=1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for key in sorted(record):
        val = record[key]
        w.writerow([key, json.dumps(val, sort_keys=True) if isinstance(val, (dict, list)) else val])
    return buf.getvalue()


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(cfg: RunConfig) -> int:
    inst = sample(cfg.params(), cfg.seed, cfg.sigma_mode)
    summary = {
        "n": inst.graph.n,
        "edges": len(inst.graph.edges),
        "principal_blocks": len(inst.layout.principal),
        "fooling_blocks": len(inst.layout.fooling),
    }
    body = json.dumps(inst.to_dict(), sort_keys=True) + "\n"
    if cfg.format == "csv":
        body = _kv_csv({**summary, "instance": inst.to_dict()})
    _emit(body, cfg)
    print(" ".join(f"{k}={v}" for k, v in summary.items()), file=sys.stderr if not cfg.out else sys.stdout)
    return EXIT_OK


def _load_instance(path: str, variant: str) -> tuple[Graph, Any, str]:
    data = json.loads(Path(path).read_text())
    if "layout" in data and "params" in data:
        inst = Instance.from_dict(data)
        return inst.graph, inst.layout, inst.params.variant
    return Graph.from_dict(data), None, variant


def cmd_run(cfg: RunConfig) -> int:
    spec = ProtocolSpec.parse(cfg.protocol)
    opts = dict(spec.options)
    cap = int(opts["bandwidth"]) if "bandwidth" in opts else None
    trials = cfg.trials or 100
    fixed = _load_instance(cfg.instance, cfg.variant) if cfg.instance else None
    params = None if fixed else cfg.params()

    valid = 0
    edges_total = 0
    mu_total = 0
    max_bits = 0
    rounds = 0
    kind = cfg.variant
    for trial in range(trials):
        if fixed:
            graph, layout, kind = fixed
        else:
            inst = sample(params, cfg.seed * 1_000_003 + trial, cfg.sigma_mode)
            graph, layout, kind = inst.graph, inst.layout, inst.params.variant
        proto = spec.build(graph.n, layout, kind)
        if cap is not None:
            proto = replace(proto, bandwidth=cap)
        rounds = proto.rounds
        _, out, bits = run_protocol(graph, proto, seed=cfg.seed + trial)
        max_bits = max(max_bits, bits)
        if kind == "mis":
            valid += is_mis(graph, out.vertices)
        else:
            edges_total += matching_score(graph, out).valid_edges
            mu_total += max_matching_size(graph)

    record: dict[str, Any] = {
        "command": "run",
        "protocol": str(spec),
        "kind": kind,
        "trials": trials,
        "rounds": rounds,
        "max_bits": max_bits,
        "seed": cfg.seed,
    }
    if kind == "mis":
        record["validity_rate"] = valid / trials
    else:
        mean_edges = edges_total / trials
        mean_mu = mu_total / trials
        record["mean_valid_edges"] = mean_edges
        record["mean_max_matching"] = mean_mu
        record["ratio"] = mean_mu / mean_edges if mean_edges else math.inf
    text = _kv_csv(record) if cfg.format == "csv" else json.dumps(record, sort_keys=True) + "\n"
    _emit(text, cfg)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    kw: dict[str, Any] = {}
    if cfg.suite in ("embedding", "all"):
        kw = {"k": cfg.k, "sigma_mode": cfg.sigma_mode}
        if cfg.toy_f is not None:
            kw.update(f_hat=cfg.toy_f[0], p_hat=cfg.toy_p[0])
        if cfg.protocol:
            kw["protocols"] = [cfg.protocol]
    report = run_suite(cfg.suite, trials=cfg.trials, seed=cfg.seed, **kw)
    report.config = {**report.config, "command": cfg.to_dict()}
    _emit(report.to_csv() if cfg.format == "csv" else report.to_json() + "\n", cfg)
    for q in report.failures():
        print(f"FAIL {q.name}: value={q.value} budget={q.budget} {q.note}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_SUITE


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except Overflow as exc:
        print(f"overflow: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except BandwidthExceeded as exc:
        print(f"bandwidth violation: {exc}", file=sys.stderr)
        return EXIT_BANDWIDTH
    except (ConfigError, LayoutRequired, OSError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
