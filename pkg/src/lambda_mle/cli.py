"""Command-line interface: ``simulate``, ``fit`` and ``audit``.

Exit codes: 0 success, 2 validation or parse error, 3 domain error during a
solve, 4 monotonicity violation.

Every flag of ``simulate`` and ``fit`` can also come from a JSON manifest
(``--manifest``) whose keys are the flag names with dashes replaced by
underscores; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple


from . import __version__
from .dirichlet import DirichletPerturbationModel, as_simplex, dp_sample
from .errors import DomainError, InitializationError, InvalidManifest, InvalidParameter, ParseError
from .family import FamilyModel, SufficientData
from .io import (
    fit_to_json,
    read_json,
    read_samples,
    sidecar_path,
    trace_from_json,
    trace_to_json,
    write_json,
    write_samples,
)
from .qgaussian import QGaussianModel, qg_sample
from .solver import SolverConfig, monotonicity_audit, solve

log = logging.getLogger("lambda_mle")

EXIT_OK, EXIT_INVALID, EXIT_DOMAIN, EXIT_MONOTONE = 0, 2, 3, 4

SOLVER_DEFAULTS = {"tol_step": 1e-12, "tol_residual": 1e-10, "max_iter": 500, "slack": 1e-9}


@dataclass
class RunManifest:
    family: str
    lam: Optional[float] = None
    sigma: Optional[float] = None
    theta: Optional[float] = None
    p: Optional[List[float]] = None
    n: Optional[int] = None
    seed: Optional[int] = None
    data: Optional[str] = None
    out: Optional[str] = None
    inits: List[Tuple[str, Optional[List[float]]]] = field(default_factory=list)
    tol_step: float = SOLVER_DEFAULTS["tol_step"]
    tol_residual: float = SOLVER_DEFAULTS["tol_residual"]
    max_iter: int = SOLVER_DEFAULTS["max_iter"]
    slack: float = SOLVER_DEFAULTS["slack"]

    def validate_simulate(self):
        self._validate_family()
        if self.n is None or int(self.n) < 1:
            raise InvalidManifest(f"n must be a positive integer, got {self.n!r}")
        if self.seed is None:
            raise InvalidManifest("simulate requires --seed")
        if self.out is None:
            raise InvalidManifest("simulate requires --out")
        if self.family == "qgaussian":
            if self.theta is None or not float(self.theta) < 0:
                raise InvalidManifest(f"qgaussian needs --theta < 0, got {self.theta!r}")
        else:
            if self.p is None:
                raise InvalidManifest("dirichlet needs --p")
            try:
                as_simplex(self.p)
            except InvalidParameter as exc:
                raise InvalidManifest(str(exc)) from exc

    def _validate_family(self):
        if self.family not in ("qgaussian", "dirichlet"):
            raise InvalidManifest(f"unknown family {self.family!r}")
        try:
            if self.family == "qgaussian":
                if self.lam is None:
                    raise InvalidManifest("qgaussian needs --lambda")
                QGaussianModel(self.lam)
            else:
                if self.sigma is None:
                    raise InvalidManifest("dirichlet needs --sigma")
                DirichletPerturbationModel(self.sigma, 1)
        except InvalidParameter as exc:
            raise InvalidManifest(str(exc)) from exc

    def model(self, d: Optional[int] = None) -> FamilyModel:
        self._validate_family()
        if self.family == "qgaussian":
            return QGaussianModel(self.lam)
        if d is None:
            d = len(self.p) - 1
        return DirichletPerturbationModel(self.sigma, d)

    def solver_config(self, init) -> SolverConfig:
        kind, value = init
        return SolverConfig(
            tol_step=float(self.tol_step),
            tol_residual=float(self.tol_residual),
            max_iter=int(self.max_iter),
            monotonicity_slack=float(self.slack),
            init=kind,
            init_value=None if value is None else tuple(value),
        )


def _float_list(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {text!r}") from exc


class _InitAction(argparse.Action):
    """Collect ``--init``, ``--init-theta`` and ``--init-eta`` in command-line order."""

    def __call__(self, parser, namespace, values, option_string=None):
        inits = list(getattr(namespace, "inits", None) or [])
        if self.dest == "init_mean":
            if values != "mean":
                parser.error(f"--init accepts only 'mean', got {values!r}")
            inits.append(("mean", None))
        else:
            kind = "theta" if self.dest == "init_theta" else "eta"
            inits.append((kind, _float_list(values)))
        namespace.inits = inits


def _add_family_flags(p: argparse.ArgumentParser):
    p.add_argument("--manifest", help="JSON file mirroring these flags")
    p.add_argument("--family", choices=["qgaussian", "dirichlet"])
    p.add_argument("--lambda", dest="lam", type=float, help="curvature for qgaussian, in (-2, 0)")
    p.add_argument("--sigma", type=float, help="noise level for dirichlet (lambda = -sigma)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lambda-mle", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a dataset and write CSV plus JSON sidecar")
    _add_family_flags(sim)
    sim.add_argument("--theta", type=float, help="true natural parameter (qgaussian)")
    sim.add_argument("--p", type=_float_list, help="true composition, comma separated (dirichlet)")
    sim.add_argument("--n", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", help="CSV path; the sidecar goes next to it with a .json suffix")
    sim.add_argument("--replicates", type=int, default=1, help="write R datasets with seeds seed+i")

    fit = sub.add_parser("fit", help="run the fixed-point iteration on a dataset")
    _add_family_flags(fit)
    fit.add_argument("--data")
    fit.add_argument("--init", dest="init_mean", action=_InitAction, metavar="mean")
    fit.add_argument("--init-theta", dest="init_theta", action=_InitAction, metavar="LIST")
    fit.add_argument("--init-eta", dest="init_eta", action=_InitAction, metavar="LIST")
    fit.add_argument("--tol-step", type=float)
    fit.add_argument("--tol-residual", type=float)
    fit.add_argument("--max-iter", type=int)
    fit.add_argument("--slack", type=float, help="allowed relative log-likelihood drop")
    fit.add_argument("--trace", help="trace JSON path; with several inits, _<j> is appended to the stem")
    fit.add_argument("--out", help="report JSON path (default: stdout)")

    aud = sub.add_parser("audit", help="check a stored trace for monotonicity violations")
    aud.add_argument("--trace", required=True)
    aud.add_argument("--slack", type=float, default=SOLVER_DEFAULTS["slack"])
    return parser


def _manifest_from_args(args) -> RunManifest:
    values = dict(vars(args))
    if values.get("manifest"):
        doc = read_json(values["manifest"])
        if not isinstance(doc, dict):
            raise InvalidManifest("manifest must be a JSON object")
        for key, val in doc.items():
            key = key.replace("-", "_")
            key = "lam" if key == "lambda" else key
            if key == "inits":
                # [{"kind": "theta", "value": [-0.5]}, {"kind": "mean"}]
                if not values.get("inits"):
                    values["inits"] = [(i["kind"], i.get("value")) for i in val]
            elif values.get(key) is None:
                values[key] = val
    if values.get("p") is not None:
        values["p"] = _float_list(values["p"])
    kwargs = {k: values[k] for k in RunManifest.__dataclass_fields__ if values.get(k) is not None}
    if "family" not in kwargs:
        kwargs["family"] = None
    return RunManifest(**kwargs)


def _simulate_one(manifest: RunManifest, seed: int, out: Path):
    if manifest.family == "qgaussian":
        samples = qg_sample(manifest.theta, manifest.lam, manifest.n, seed)
        params = {"lambda": manifest.lam, "theta": manifest.theta}
    else:
        samples = dp_sample(manifest.p, manifest.sigma, manifest.n, seed)
        params = {"sigma": manifest.sigma, "lambda": -manifest.sigma, "p": list(manifest.p), "d": len(manifest.p) - 1}
    meta = {"kind": "dataset", "family": manifest.family, "parameters": params, "n": manifest.n, "seed": seed}
    write_samples(out, manifest.family, samples, meta)
    return out


def cmd_simulate(args) -> int:
    manifest = _manifest_from_args(args)
    manifest.validate_simulate()
    reps = int(args.replicates)
    if reps < 1:
        raise InvalidManifest("--replicates must be >= 1")
    out = Path(manifest.out)
    if reps == 1:
        jobs = [(int(manifest.seed), out)]
    else:
        jobs = [(int(manifest.seed) + i, out.with_name(f"{out.stem}_r{i}{out.suffix}")) for i in range(reps)]
    with ThreadPoolExecutor() as pool:
        written = list(pool.map(lambda job: _simulate_one(manifest, *job), jobs))
    for path in written:
        log.info("wrote %s", path)
    return EXIT_OK


def _fill_from_sidecar(manifest: RunManifest):
    side = sidecar_path(manifest.data)
    if not side.exists():
        return
    doc = read_json(side)
    params = doc.get("parameters", {})
    if manifest.family is None:
        manifest.family = doc.get("family")
    if manifest.family == doc.get("family"):
        if manifest.lam is None and manifest.family == "qgaussian":
            manifest.lam = params.get("lambda")
        if manifest.sigma is None and manifest.family == "dirichlet":
            manifest.sigma = params.get("sigma")


def _trace_paths(base: Optional[str], count: int) -> List[Optional[Path]]:
    if base is None:
        return [None] * count
    base = Path(base)
    if count == 1:
        return [base]
    return [base.with_name(f"{base.stem}_{j}{base.suffix}") for j in range(count)]


def cmd_fit(args) -> int:
    manifest = _manifest_from_args(args)
    if manifest.data is None:
        raise InvalidManifest("fit requires --data")
    _fill_from_sidecar(manifest)
    if manifest.family is None:
        raise InvalidManifest("fit requires --family (or a dataset sidecar naming it)")
    manifest._validate_family()

    if manifest.family == "dirichlet":
        with open(manifest.data) as fh:
            width = len(fh.readline().strip().split(","))
        model = manifest.model(d=width - 1)
    else:
        model = manifest.model()
    samples = read_samples(manifest.data, model)
    data = SufficientData.from_samples(model, samples)

    inits = manifest.inits or [("mean", None)]
    paths = _trace_paths(args.trace, len(inits))
    fits = []
    status = EXIT_OK
    for j, (init, path) in enumerate(zip(inits, paths)):
        config = manifest.solver_config(init)
        result = solve(model, data, config)
        entry = fit_to_json(result, model)
        entry["init"] = {"kind": init[0], "value": init[1]}
        if path is not None:
            write_json(path, trace_to_json(result.trace, model, init=entry["init"]))
            entry["trace"] = str(path)
        fits.append(entry)
        if result.termination == "monotonicity-violation":
            status = EXIT_MONOTONE
        log.info("init %d (%s): %s after %d iterations", j, init[0], result.termination, result.iterations)

    best = max(range(len(fits)), key=lambda j: fits[j]["loglik"])
    report = {
        "schema_version": 1,
        "kind": "fit",
        "model": model.describe(),
        "data": str(manifest.data),
        "n": data.n,
        **{k: v for k, v in fits[best].items() if k not in ("init", "trace")},
        "best_fit": best,
        "fits": fits,
    }
    if args.out:
        write_json(args.out, report)
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    return status


def cmd_audit(args) -> int:
    trace = trace_from_json(read_json(args.trace))
    report = monotonicity_audit(trace, slack=args.slack)
    print(json.dumps({"trace": args.trace, "records": len(trace), **report.as_dict()}, sort_keys=True))
    return EXIT_OK if report.ok else EXIT_MONOTONE


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "audit": cmd_audit}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ParseError, InvalidManifest, InvalidParameter, InitializationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
