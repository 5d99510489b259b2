"""Command line interface.

Subcommands: ``run`` sweeps seeded experiments and writes CSV/JSON
reports, ``gen`` writes an instance file (plus a ``.cstar`` sidecar with
the generating vector so perturbed starts stay reproducible), ``solve``
runs one solver on an instance file, and ``verify`` executes the
invariant suite on synthetic fixtures.

Exit codes: 0 on success, 1 when any trial failed to converge (unless
``--allow-nonconverged``) or a verify check failed, 2 on usage or IO
errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .baselines import alg1_solve, newton_exact_solve
from .cayley_free import SolverConfig, solve as cayley_free_solve
from .core import approx_jacobian, evaluate_A, full_svd, load_instance, save_instance
from .errors import ArityMismatch, DimensionMismatch, IoFailure, IsvpError
from .harness import (
    Algorithm,
    ExperimentConfig,
    build_B0,
    emit_reports,
    generate_instance,
    perturb_c_star,
    run_experiment,
)
from .report import SolveStatus
from .verification import run_all_checks

EXIT_OK = 0
EXIT_NONCONVERGED = 1
EXIT_USAGE = 2


def parse_seeds(spec: str) -> tuple[int, ...]:
    """Parse "1..10" ranges and "1,4,9" lists (mixes allowed)."""
    seeds: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"no seeds in {spec!r}")
    return tuple(seeds)


def _write_vector(path: Path, vec: np.ndarray) -> None:
    path.write_text(" ".join(format(x, ".17g") for x in vec) + "\n")


def _read_vector(path: Path) -> np.ndarray:
    return np.array([float(tok) for tok in Path(path).read_text().split()])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isvp")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded experiment sweep")
    run.add_argument("--m", type=int, required=True)
    run.add_argument("--n", type=int, required=True)
    run.add_argument("--beta", type=float, required=True)
    run.add_argument("--mu", type=float, default=0.0)
    run.add_argument(
        "--seeds", type=parse_seeds, required=True, help='e.g. "1..10" or "1,4,9"'
    )
    run.add_argument(
        "--algorithm",
        choices=[a.value for a in Algorithm],
        default=Algorithm.CAYLEY_FREE.value,
    )
    run.add_argument("--tol", type=float, default=1e-10)
    run.add_argument("--max-iter", type=int, default=50)
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--format", type=str, default="csv,json")
    run.add_argument("--allow-nonconverged", action="store_true")

    gen = sub.add_parser("gen", help="generate an instance file")
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", type=Path, required=True)

    slv = sub.add_parser("solve", help="solve one instance file")
    slv.add_argument("--instance", type=Path, required=True)
    slv.add_argument("--c0", type=Path, help="file with the start vector")
    slv.add_argument("--beta", type=float, help="perturb the generating vector instead")
    slv.add_argument("--c-star", type=Path, help="generating vector (defaults to INSTANCE.cstar)")
    slv.add_argument("--mu", type=float, default=0.0)
    slv.add_argument("--seed", type=int, default=0)
    slv.add_argument(
        "--algorithm",
        choices=[a.value for a in Algorithm],
        default=Algorithm.CAYLEY_FREE.value,
    )
    slv.add_argument("--tol", type=float, default=1e-10)
    slv.add_argument("--max-iter", type=int, default=50)

    ver = sub.add_parser("verify", help="run the invariant suite")
    ver.add_argument("--trials", type=int, default=50)
    ver.add_argument("--seed", type=int, default=20240601)
    return parser


def _cmd_run(args) -> int:
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    unknown = set(formats) - {"csv", "json"}
    if unknown:
        raise ValueError(f"unknown report format(s): {', '.join(sorted(unknown))}")
    config = ExperimentConfig(
        m=args.m,
        n=args.n,
        beta=args.beta,
        mu=args.mu,
        seeds=args.seeds,
        algorithm=Algorithm(args.algorithm),
        tol=args.tol,
        max_iter=args.max_iter,
    )
    bundle = run_experiment(config)
    paths = emit_reports(bundle, formats, args.out)
    agg = bundle.aggregate()
    for trial in bundle.trials:
        print(
            f"seed {trial.seed}: {trial.status}, iterations {trial.iterations}, "
            f"{trial.total_ms:.1f} ms"
        )
    print(
        f"converged {agg['converged_fraction']:.0%} of {agg['trials']} trials; "
        f"wrote {', '.join(str(p) for p in paths)}"
    )
    all_converged = all(t.status == SolveStatus.CONVERGED.value for t in bundle.trials)
    if all_converged or args.allow_nonconverged:
        return EXIT_OK
    return EXIT_NONCONVERGED


def _cmd_gen(args) -> int:
    instance, c_star = generate_instance(args.m, args.n, args.seed)
    save_instance(instance, args.out)
    sidecar = Path(str(args.out) + ".cstar")
    try:
        _write_vector(sidecar, c_star)
    except OSError as exc:
        raise IoFailure(f"cannot write {sidecar}: {exc}") from exc
    print(f"wrote {args.out} and {sidecar}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    if args.c0 is not None:
        try:
            c0 = _read_vector(args.c0)
        except (OSError, ValueError) as exc:
            raise IoFailure(f"cannot read start vector {args.c0}: {exc}") from exc
    elif args.beta is not None:
        cstar_path = args.c_star or Path(str(args.instance) + ".cstar")
        try:
            c_star = _read_vector(cstar_path)
        except (OSError, ValueError) as exc:
            raise IoFailure(
                f"--beta needs the generating vector; cannot read {cstar_path}: {exc}"
            ) from exc
        c0 = perturb_c_star(c_star, args.beta, args.seed)
    else:
        raise IoFailure("provide either --c0 FILE or --beta (with a .cstar sidecar)")
    if c0.size != instance.n:
        raise IoFailure(f"start vector has {c0.size} entries, instance needs {instance.n}")

    config = SolverConfig(tol=args.tol, max_iter=args.max_iter)
    algorithm = Algorithm(args.algorithm)
    if algorithm is Algorithm.CAYLEY_FREE:
        factors = full_svd(evaluate_A(instance, c0))
        J0 = approx_jacobian(factors.U, factors.V, instance)
        B0 = build_B0(J0, args.mu, args.seed)
        report = cayley_free_solve(instance, c0, B0, config)
    elif algorithm is Algorithm.ALG1:
        report = alg1_solve(instance, c0, config)
    else:
        report = newton_exact_solve(instance, c0, config)
    for rec in report.records:
        print(f"k={rec.k} d={rec.d:.5e} cond_J={rec.cond_j:.5e}")
    print(f"{report.status.value} after {report.iterations} iterations")
    return EXIT_OK if report.status is SolveStatus.CONVERGED else EXIT_NONCONVERGED


def _cmd_verify(args) -> int:
    results = run_all_checks(trials=args.trials, seed=args.seed)
    for result in results:
        print(result.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_NONCONVERGED


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "gen": _cmd_gen,
        "solve": _cmd_solve,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (IsvpError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        # malformed inputs and files exit 2, solver-side failures exit 1
        usage_like = (IoFailure, DimensionMismatch, ArityMismatch, ValueError)
        return EXIT_USAGE if isinstance(exc, usage_like) else EXIT_NONCONVERGED


if __name__ == "__main__":
    raise SystemExit(main())
