"""Command-line runner: verification suites, counterexamples, sweeps,
and training, with JSON-lines / CSV artifacts.

Exit codes: 0 success, 1 check or verdict failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema

from .errors import ConfigError, ContrastLabError
from .model import LatentClassModel, digest_of, sample_batch, sample_block_batch
from .losses import LossKind, block_loss_exact, unsup_loss_exact
from .representation import (
    RepresentationFn,
    identity_representation,
    save_representation,
    zero_representation,
)
from .training import FunctionClass, erm_block, erm_descent, erm_finite, select_best_exact
from .supervised import avg_sup_loss
from . import verifier
from .verifier import BoundCheck, ScenarioReport

_LOSS_SCHEMA = {
    "type": "object",
    "properties": {
        "family": {"enum": ["hinge", "logistic"]},
        "margin": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "model": {"type": ["string", "object"]},
        "representation": {"type": ["string", "object"]},
        "function_class": {"type": "object"},
        "loss": _LOSS_SCHEMA,
        "checks": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "k": {"type": "integer", "minimum": 1},
        "k_list": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "b": {"type": "integer", "minimum": 1},
        "b_list": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "M": {"type": "integer", "minimum": 1},
        "M_list": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "steps": {"type": "integer", "minimum": 1},
        "step_size": {"type": "number", "exclusiveMinimum": 0},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "seeds": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
        "axis": {"enum": ["k", "M", "b"]},
        "counterexample": {"type": "object"},
    },
    "additionalProperties": False,
}

CHECK_IDS = (
    "eq-8-identity",
    "lemma-4.3",
    "lemma-4.4",
    "thm-4.5-population",
    "thm-4.1-statistical",
    "lemma-4.6",
    "corollary-4.7",
    "prop-6.2",
    "thm-B1-population",
    "lemma-B2-population",
)


def _load_config(path) -> dict:
    if path is None:
        raise ConfigError("--config is required for this command")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(cfg, _CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(
            f"config invalid at {'/'.join(str(p) for p in exc.absolute_path)}: {exc.message}"
        ) from None
    return cfg


def _resolve_model(cfg, base: Path) -> LatentClassModel:
    spec = cfg.get("model")
    if spec is None:
        raise ConfigError("config needs a model")
    if isinstance(spec, str):
        p = Path(spec)
        if not p.is_absolute():
            p = base / p
        try:
            with open(p) as fh:
                spec = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read model file: {exc}") from None
    try:
        return LatentClassModel.from_json_dict(spec)
    except ContrastLabError as exc:
        raise ConfigError(f"bad model: {exc}") from None


def _resolve_representation(cfg, model, base: Path) -> RepresentationFn:
    spec = cfg.get("representation")
    if spec is None:
        return identity_representation(model)
    if isinstance(spec, str):
        p = Path(spec)
        if not p.is_absolute():
            p = base / p
        try:
            with open(p) as fh:
                spec = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read representation file: {exc}") from None
    try:
        return RepresentationFn.from_json_dict(spec)
    except ContrastLabError as exc:
        raise ConfigError(f"bad representation: {exc}") from None


def _resolve_loss(cfg) -> LossKind:
    spec = cfg.get("loss", {})
    try:
        return LossKind(spec.get("family", "hinge"), spec.get("margin", 1.0))
    except ContrastLabError as exc:
        raise ConfigError(f"bad loss: {exc}") from None


def _resolve_function_class(cfg, model, f, base: Path) -> FunctionClass:
    spec = cfg.get("function_class")
    if spec is None:
        return FunctionClass(
            "finite_list",
            members=(zero_representation(model, f.d, f.norm_bound), f),
        )
    kind = spec.get("kind", "finite_list")
    try:
        if kind == "finite_list":
            members = tuple(
                RepresentationFn.from_json_dict(m) for m in spec.get("members", [])
            )
            return FunctionClass("finite_list", members=members)
        return FunctionClass(
            kind, d=int(spec.get("d", f.d)), norm_bound=float(spec.get("R", f.norm_bound))
        )
    except ContrastLabError as exc:
        raise ConfigError(f"bad function_class: {exc}") from None


def _run_checks(cfg, model, f, kind, jobs) -> list[BoundCheck]:
    k = cfg.get("k", 1)
    b = cfg.get("b", 2)
    epsilon = cfg.get("epsilon", 0.01)
    delta = cfg.get("delta", 0.1)
    seeds = tuple(cfg.get("seeds", [0]))
    M_list = tuple(cfg.get("M_list", [cfg.get("M", 256)]))
    base = None  # function class resolved lazily for the statistical check

    def job(check_id):
        if check_id == "eq-8-identity":
            return [verifier.check_eq_8_identity(f, model, kind)]
        if check_id == "lemma-4.3":
            return [verifier.check_lemma_4_3(f, model, kind)]
        if check_id == "lemma-4.4":
            return [verifier.check_lemma_4_4(f, model, kind)]
        if check_id == "thm-4.5-population":
            return [verifier.check_theorem_4_5_population(f, model, kind)]
        if check_id == "thm-4.1-statistical":
            fclass = _resolve_function_class(cfg, model, f, base)
            return verifier.check_theorem_4_1_statistical(
                model, fclass, kind, M_list=M_list, seeds=seeds, delta=delta
            )
        if check_id == "lemma-4.6":
            return [verifier.check_lemma_4_6(f, model, epsilon)]
        if check_id == "corollary-4.7":
            return [verifier.check_corollary_4_7(f, f, model, epsilon)]
        if check_id == "prop-6.2":
            return verifier.check_prop_6_2(f, model, b, kind)
        if check_id == "thm-B1-population":
            return verifier.check_theorem_B1_population(f, model, k, kind)
        if check_id == "lemma-B2-population":
            return [verifier.check_lemma_B2_population(f, model, k, epsilon)]
        raise ConfigError(f"unknown check id {check_id!r}")

    checks = cfg.get("checks") or list(CHECK_IDS)
    for cid in checks:
        if cid not in CHECK_IDS:
            raise ConfigError(f"unknown check id {cid!r}")
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        batches = list(pool.map(job, checks))
    out = [c for batch in batches for c in batch]
    out.sort(key=lambda c: (c.id, json.dumps(c.details, sort_keys=True)))
    return out


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _summary(records, cfg, no_timestamp: bool) -> dict:
    s = verifier.summarize(records)
    s["config_digest"] = digest_of(cfg)
    if not no_timestamp:
        s["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    return s


def cmd_verify(args) -> int:
    cfg = _load_config(args.config)
    base = Path(args.config).parent
    model = _resolve_model(cfg, base)
    f = _resolve_representation(cfg, model, base)
    kind = _resolve_loss(cfg)
    records = _run_checks(cfg, model, f, kind, args.jobs)
    summary = _summary(records, cfg, args.no_timestamp)
    out = _out_dir(args)
    verifier.write_report(out / "report.jsonl", records, summary)
    failed = [c for c in records if not c.passed]
    for c in records:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.id} lhs={c.lhs:.9g} rhs={c.rhs:.9g} slack={c.slack:.3g}")
    print(f"{summary['passed']}/{summary['total']} checks passed")
    return 1 if failed else 0


def cmd_counterexample(args) -> int:
    params = {}
    if args.n is not None:
        params["n"] = args.n
    if args.r is not None:
        params["r"] = args.r
    params["k"] = args.k
    if args.name not in ("fig1a", "fig1b", "appC1", "appC2"):
        print(f"unknown counterexample {args.name!r}", file=sys.stderr)
        return 2
    try:
        report = verifier.run_counterexample(args.name, **params)
    except ContrastLabError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report.to_json_dict(), sort_keys=True))
    print(f"scenario {report.scenario_id}  params {report.params}")
    for member in sorted(report.loss_table):
        print(
            f"  {member}: unsup={report.loss_table[member]:.6g} "
            f"avg_sup={report.sup_table[member]:.6g}"
        )
    print(f"verdict: {report.verdict}")
    if args.out:
        out = _out_dir(args)
        summary = _summary([report], params, args.no_timestamp)
        verifier.write_report(out / "report.jsonl", [report], summary)
    return 0 if "as predicted" in report.verdict else 1


def _sweep_rows(cfg, model, f, kind, args) -> tuple[list[dict], list[str]]:
    axis = cfg.get("axis", "k")
    seeds = cfg.get("seeds", [0])
    M = cfg.get("M", 256)
    base = Path(args.config).parent
    if axis == "k":
        fclass = _resolve_function_class(cfg, model, f, base)
        rows = verifier.sweep_negative_samples(
            model, fclass, kind, cfg.get("k_list", [1, 2, 4]), M, seeds
        )
        cols = [
            "axis", "k", "seed", "selected_index", "empirical_loss",
            "population_loss", "avg_sup_loss", "verdict",
        ]
        return rows, cols
    if axis == "M":
        fclass = _resolve_function_class(cfg, model, f, base)
        star = select_best_exact(fclass, model, cfg.get("k", 1), kind)
        rows = []
        per_m = {}
        for m_val in cfg.get("M_list", [256, 1024, 4096]):
            for seed in seeds:
                batch = sample_batch(model, cfg.get("k", 1), m_val, seed)
                fit = erm_finite(fclass, batch, kind, model)
                gap = (
                    unsup_loss_exact(fit.f_hat, model, cfg.get("k", 1), kind)
                    - star.empirical_loss
                )
                rows.append(
                    {"axis": "M", "M": m_val, "seed": seed,
                     "selected_index": fit.selected_index, "gap": gap}
                )
                per_m.setdefault(m_val, []).append(gap)
        for m_val in sorted(per_m):
            rows.append(
                {"axis": "M", "M": m_val, "seed": "median",
                 "gap": statistics.median(per_m[m_val])}
            )
        return rows, ["axis", "M", "seed", "selected_index", "gap"]
    # b axis: train on block batches, report exact block loss of the result
    fclass = _resolve_function_class(cfg, model, f, base)
    if fclass.kind == "finite_list":
        raise ConfigError("b-axis sweep needs a parametric function_class")
    rows = []
    for b in cfg.get("b_list", [1, 2, 4]):
        for seed in seeds:
            batch = sample_block_batch(model, b, M, seed)
            fit = erm_block(
                fclass, batch, kind, model,
                steps=cfg.get("steps", 200),
                step_size=cfg.get("step_size", 0.1),
                seed=seed,
            )
            rows.append(
                {"axis": "b", "b": b, "seed": seed,
                 "empirical_loss": fit.empirical_loss,
                 "block_loss": block_loss_exact(fit.f_hat, model, b, kind)}
            )
    return rows, ["axis", "b", "seed", "empirical_loss", "block_loss"]


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    base = Path(args.config).parent
    model = _resolve_model(cfg, base)
    f = _resolve_representation(cfg, model, base)
    kind = _resolve_loss(cfg)
    rows, cols = _sweep_rows(cfg, model, f, kind, args)
    out = _out_dir(args)
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    base = Path(args.config).parent
    model = _resolve_model(cfg, base)
    f = _resolve_representation(cfg, model, base)
    kind = _resolve_loss(cfg)
    fclass = _resolve_function_class(cfg, model, f, base)
    seed = args.seed if args.seed is not None else cfg.get("seeds", [0])[0]
    M = cfg.get("M", 1000)
    steps = cfg.get("steps", 500)
    step_size = cfg.get("step_size", 0.1)
    if "b" in cfg:
        batch = sample_block_batch(model, cfg["b"], M, seed)
        result = erm_block(fclass, batch, kind, model, steps, step_size, seed)
    else:
        k = cfg.get("k", 1)
        batch = sample_batch(model, k, M, seed)
        if fclass.kind == "finite_list":
            result = erm_finite(fclass, batch, kind, model)
        else:
            result = erm_descent(fclass, batch, kind, model, steps, step_size, seed)
    out = _out_dir(args)
    save_representation(result.f_hat, out / "trained_representation.json")
    info = {
        "empirical_loss": result.empirical_loss,
        "selected_index": result.selected_index,
        "avg_sup_loss": avg_sup_loss(result.f_hat, model, 2, kind, use_mean=True),
        "config_digest": digest_of(cfg),
        "seed": seed,
    }
    with open(out / "train_report.json", "w") as fh:
        json.dump(info, fh, indent=2, sort_keys=True)
    print(json.dumps(info, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contrastlab",
        description="Numerical verification lab for contrastive representation bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output directory")
        p.add_argument("--jobs", type=int, default=None, help="worker pool size")
        p.add_argument("--no-timestamp", action="store_true")

    common(sub.add_parser("verify", help="run bound and identity checks"))
    ce = sub.add_parser("counterexample", help="reproduce a counterexample")
    ce.add_argument("name")
    ce.add_argument("--n", type=int, default=None)
    ce.add_argument("--r", type=float, default=None)
    ce.add_argument("--k", type=int, default=1)
    common(ce)
    common(sub.add_parser("sweep", help="axis sweep (k, M, or b)"))
    common(sub.add_parser("train", help="train a representation"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    handlers = {
        "verify": cmd_verify,
        "counterexample": cmd_counterexample,
        "sweep": cmd_sweep,
        "train": cmd_train,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ContrastLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
