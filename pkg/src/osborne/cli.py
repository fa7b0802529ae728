"""Command-line front end.

    osborne --input A.mtx --epsilon 0.01 --variant strict --trace trace.csv

Writes a JSON report (stdout by default).  Exit status is 0 when every
nontrivial strongly connected component ends strictly balanced, 2 when an
iteration cap stopped a run and 1 on usage or parse errors.
"""

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import StructuralError
from .matrix_io import FORMATS, ParseError, parse_matrix
from .preprocessing import canonical_epsilon, canonicalize, scc_decompose, uncanonicalize_scaling
from .report import dumps, write_trace
from .steps import VARIANTS, VariantPolicy, run_classic
from .strict import StepCapExceeded, run_strict

__all__ = ["RunConfig", "balance_matrix", "main"]

log = logging.getLogger(__name__)

WORKERS_ENV = "OSBORNE_WORKERS"
DEFAULT_CLASSIC_ITERS = 10**6


@dataclass(frozen=True)
class RunConfig:
    input: str = ""
    format: str = "matrix-market"
    p: float = 1.0
    epsilon: float = 0.01
    variant: str = "strict"
    max_iters: int = None
    seed: int = 0
    trace: str = None
    report: str = None
    workers: int = 1

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 0.5):
            raise ValueError(f"epsilon must lie in (0, 1/2], got {self.epsilon}")
        if not self.p >= 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.format not in FORMATS:
            raise ValueError(f"unknown format {self.format!r}")
        if self.max_iters is not None and self.max_iters <= 0:
            raise ValueError("max-iters must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")


def _run_component(sub, config, eps1):
    records = []
    if config.variant == "strict":
        try:
            rep = run_strict(sub, eps1, sink=records.append, max_steps=config.max_iters,
                             keep_trace=False)
        except StepCapExceeded as exc:
            log.error("%s", exc)
            rep = exc.report
            rep.termination = "iteration_cap"
    else:
        policy = VariantPolicy(config.variant, config.seed)
        rep = run_classic(sub, policy, eps1, config.max_iters or DEFAULT_CLASSIC_ITERS,
                          sink=records.append, keep_trace=False)
    return rep, records


def balance_matrix(raw, config):
    """Canonicalize, split into components and balance each one.

    Returns ``(report, trace_records)``; ``report`` is a plain dict in a
    fixed field order.
    """
    start = time.perf_counter()
    inst = canonicalize(raw, config.p)
    A = inst.matrix
    n = A.n
    p = inst.p
    eps1 = canonical_epsilon(config.epsilon, p)
    if config.variant == "strict" and eps1 > 0.5:
        raise ValueError(
            f"epsilon {config.epsilon} in the L{p:g} norm needs {eps1:.4g} > 1/2 in L1"
        )
    x = np.zeros(n)
    components = []
    trace = []
    total_steps = phases = reactivations = 0
    worst = 0.0
    cap_hit = False
    if inst.trivial:
        termination = "nothing_to_balance"
        comps = []
    else:
        dec = scc_decompose(A)
        comps = dec.components
        big = [k for k, c in enumerate(comps) if c.size >= 2]
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = dict(zip(big, pool.map(
                lambda k: _run_component(dec.submatrices[k], config, eps1), big)))
        touched = np.zeros(n, dtype=bool)
        touched[A.src[dec.cross_arcs]] = True
        touched[A.dst[dec.cross_arcs]] = True
        for k, nodes in enumerate(comps):
            entry = {"id": k, "size": int(nodes.size), "indices": nodes}
            if k not in results:
                entry["status"] = (
                    "unbalanceable: cross-component" if touched[nodes[0]] else "vacuous"
                )
                components.append(entry)
                continue
            rep, recs = results[k]
            x[nodes] = rep.x
            total_steps += rep.steps
            phases += rep.phases
            reactivations += rep.reactivations
            worst = max(worst, rep.max_imbalance)
            cap_hit |= rep.termination != "balanced"
            entry.update(
                status=rep.termination,
                exit=rep.exit,
                steps=rep.steps,
                productive_steps=rep.productive_steps,
                phases=rep.phases,
                reactivations=rep.reactivations,
                max_imbalance=(1.0 + rep.max_imbalance) ** (1.0 / p) - 1.0,
                f_initial=rep.f_initial,
                f_final=rep.f_final,
            )
            components.append(entry)
            trace.extend(r.__class__(**{**r.__dict__, "index": int(nodes[r.index])}) for r in recs)
        termination = "iteration_cap" if cap_hit else "balanced"
    report = {
        "termination": termination,
        "variant": config.variant,
        "n": n,
        "nnz": A.nnz,
        "p": p,
        "epsilon": config.epsilon,
        "epsilon_l1": eps1,
        "seed": config.seed,
        "iterations": total_steps,
        "phases": phases,
        "reactivations": reactivations,
        "max_imbalance": (1.0 + worst) ** (1.0 / p) - 1.0,
        "max_imbalance_l1": worst,
        "strongly_connected": len(comps) == 1,
        "components": components,
        "f_initial": sum(c.get("f_initial", 0.0) for c in components),
        "f_final": sum(c.get("f_final", 0.0) for c in components),
        "x": x,
    }
    if p != 1.0:
        report["x_lp"] = uncanonicalize_scaling(x, p)
    report["wall_time"] = time.perf_counter() - start
    return report, trace


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    ap = _Parser(prog="osborne", description="Balance a matrix with Osborne's iteration.")
    ap.add_argument("--input", required=True, help="matrix file")
    ap.add_argument("--format", choices=FORMATS, default="matrix-market")
    ap.add_argument("--p", type=float, default=1.0, help="norm exponent (>= 1)")
    ap.add_argument("--epsilon", type=float, default=0.01)
    ap.add_argument("--variant", choices=VARIANTS, default="strict")
    ap.add_argument("--max-iters", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trace", default=None, help="CSV file for per-step records")
    ap.add_argument("--report", default=None, help="JSON report path (default stdout)")
    ap.add_argument("--workers", type=int, default=int(os.environ.get(WORKERS_ENV, "1")))
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(**vars(args))
        raw = parse_matrix(config.input, config.format)
        report, trace = balance_matrix(raw, config)
    except (ParseError, OSError, ValueError, StructuralError) as exc:
        print(f"osborne: error: {exc}", file=sys.stderr)
        return 1
    text = dumps(report)
    if config.report:
        with open(config.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if config.trace:
        with open(config.trace, "w", newline="") as fh:
            write_trace(trace, fh)
    return 2 if report["termination"] == "iteration_cap" else 0


if __name__ == "__main__":
    sys.exit(main())
