"""Command-line front end: ``hyperstat <command> ...`` with JSON/CSV output.

Commands
--------
divergence   closed-form divergences plus the invariant triple
entropy      differential and invariant-measure entropies
fim          Fisher information matrix (row-major)
invariant    the maximal-invariant triple of a parameter pair
sample       CSV variates from either family (d = 2)
estimate     Monte Carlo divergence estimates (plugin / mc1 / mc2)
fit          EM mixture fitting from a CSV of points
convert      parameter and point conversions between models

Exit codes: 0 ok, 2 invalid parameters, 3 infinite divergence,
4 unsupported dimension, 5 fit failure.  All randomness derives from
``--seed``; results are reproducible for a fixed flag set.  The environment
variable HYPERSTAT_THREADS caps the worker count used to evaluate shards.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

import numpy as np

from . import hyperboloid as hb
from . import poincare as pc
from .geometry import (
    ConeError,
    HyperboloidPoint,
    LorentzParam,
    SpdParam2,
    UpperHalfPoint,
    lorentz_invariant,
    param_h_to_l,
    param_l_to_h,
    point_disk_to_h,
    point_h_to_disk,
    point_h_to_l,
    point_l_to_h,
    poincare_invariant,
)
from .mixtures import FitError, em_fit
from .montecarlo import FGenerator, estimate_for_poincare, estimate_plugin, estimate_mc1, estimate_mc2, optimize_sigma, Proposal
from .sampling import RngStream, hyperboloid_sample, poincare_sample

EXIT_OK = 0
EXIT_BAD_PARAMS = 2
EXIT_INFINITE = 3
EXIT_BAD_DIMENSION = 4
EXIT_FIT_FAILURE = 5

# Named stream ids: one purpose, one stream, so that e.g. adding shards to an
# estimate never perturbs the pilot optimization.
_STREAM_SAMPLING = 1
_STREAM_ESTIMATE = 2
_STREAM_FIT = 3


def _json_dumps(obj) -> str:
    """JSON text with floats rendered at 17 significant digits."""

    def render(o) -> str:
        if isinstance(o, bool):
            return "true" if o else "false"
        if o is None:
            return "null"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            v = float(o)
            if not math.isfinite(v):
                raise ValueError("non-finite floats must not reach JSON output")
            return format(v, ".17g")
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, (list, tuple, np.ndarray)):
            return "[" + ", ".join(render(v) for v in o) + "]"
        if isinstance(o, dict):
            return (
                "{"
                + ", ".join(f"{json.dumps(str(k))}: {render(v)}" for k, v in o.items())
                + "}"
            )
        raise TypeError(f"cannot serialize {type(o)!r}")

    return render(obj)


def _emit(obj, out: Optional[str] = None) -> None:
    text = _json_dumps(obj) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _parse_param(text: str, family: str):
    """Parse a parameter literal: [[a,b],[b,c]] / {"a":..} / [t0,t1,...,td]."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise CliError(EXIT_BAD_PARAMS, f"unparseable parameter {text!r}: {err}")
    try:
        if family == "poincare":
            if isinstance(raw, dict):
                return SpdParam2(float(raw["a"]), float(raw["b"]), float(raw["c"]))
            arr = np.asarray(raw, dtype=float)
            if arr.shape == (3,):
                return SpdParam2(arr[0], arr[1], arr[2])
            return SpdParam2.from_matrix(arr)
        arr = np.asarray(raw, dtype=float)
        if arr.ndim != 1 or arr.size < 3:
            raise CliError(
                EXIT_BAD_PARAMS, f"hyperboloid parameter must be a (d+1)-vector, got {text!r}"
            )
        return LorentzParam(arr)
    except (KeyError, TypeError) as err:
        raise CliError(EXIT_BAD_PARAMS, f"malformed parameter {text!r}: {err}")
    except ConeError as err:
        raise CliError(EXIT_BAD_PARAMS, f"parameter outside its cone: {err}")


def _triple(theta, theta2, family: str):
    if family == "poincare":
        return poincare_invariant(theta, theta2)
    return lorentz_invariant(theta, theta2)


_DIVERGENCES = {
    "poincare": {
        "kl": pc.kld,
        "hellinger": pc.hellinger_sq,
        "neyman": pc.neyman_chi2,
        "jeffreys": pc.jeffreys,
        "skew-jensen": pc.skew_jensen,
        "chernoff": pc.chernoff,
    },
    "hyperboloid": {
        "kl": hb.kld,
        "hellinger": hb.hellinger_sq,
        "neyman": hb.neyman_chi2,
        "jeffreys": hb.jeffreys,
        "skew-jensen": hb.skew_jensen,
        "chernoff": None,
    },
}


def _cmd_divergence(args) -> int:
    theta = _parse_param(args.theta, args.family)
    theta2 = _parse_param(args.theta2, args.family)
    fn = _DIVERGENCES[args.family].get(args.measure)
    if fn is None:
        raise CliError(EXIT_BAD_PARAMS, f"{args.measure} is not available for {args.family}")
    extra = {}
    if args.measure == "skew-jensen":
        value = fn(theta, theta2, args.alpha)
    elif args.measure == "chernoff":
        alpha, value = fn(theta, theta2)
        extra["alpha_star"] = alpha
    else:
        value = fn(theta, theta2)
    finite = math.isfinite(value)
    payload = {
        "measure": args.measure,
        "value": value if finite else None,
        "invariant_triple": list(_triple(theta, theta2, args.family).as_tuple()),
        "finite": finite,
        **extra,
    }
    _emit(payload, args.out)
    return EXIT_OK if finite else EXIT_INFINITE


def _cmd_entropy(args) -> int:
    theta = _parse_param(args.theta, args.family)
    if args.family == "poincare":
        payload = {
            "entropy": pc.entropy(theta),
            "modified_entropy": pc.modified_entropy(theta),
        }
    else:
        if theta.d != 2:
            raise CliError(EXIT_BAD_DIMENSION, "hyperboloid entropy is available for d=2 only")
        payload = {"entropy": None, "modified_entropy": hb.modified_entropy2(theta)}
    _emit(payload, args.out)
    return EXIT_OK


def _cmd_fim(args) -> int:
    theta = _parse_param(args.theta, args.family)
    if args.family == "poincare":
        matrix = pc.fim(theta)
    else:
        if theta.d != 2:
            raise CliError(EXIT_BAD_DIMENSION, "closed-form FIM is available for d=2 only")
        matrix = hb.fim2(theta)
    _emit({"fim": [list(row) for row in matrix]}, args.out)
    return EXIT_OK


def _cmd_invariant(args) -> int:
    theta = _parse_param(args.theta, args.family)
    theta2 = _parse_param(args.theta2, args.family)
    _emit({"invariant_triple": list(_triple(theta, theta2, args.family).as_tuple())}, args.out)
    return EXIT_OK


def _cmd_sample(args) -> int:
    theta = _parse_param(args.theta, args.family)
    stream = RngStream(args.seed, _STREAM_SAMPLING)
    if args.family == "poincare":
        pts = poincare_sample(theta, args.n, stream)
        header = "x,y"
        theta_repr = [theta.a, theta.b, theta.c]
    else:
        if theta.d != 2:
            raise CliError(EXIT_BAD_DIMENSION, "sampling is implemented for d=2 only")
        pts = hyperboloid_sample(theta, args.n, stream)
        header = "x1,x2"
        theta_repr = list(theta.theta)
    lines = [
        "# family=%s theta=%s n=%d seed=%d"
        % (args.family, _json_dumps(theta_repr), args.n, args.seed),
        header,
    ]
    lines.extend(f"{format(row[0], '.17g')},{format(row[1], '.17g')}" for row in pts)
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_CLOSED_FORMS = {
    "poincare": {"kl": pc.kld, "hellinger": pc.hellinger_sq, "neyman": pc.neyman_chi2},
    "hyperboloid": {"kl": hb.kld, "hellinger": hb.hellinger_sq, "neyman": hb.neyman_chi2},
}


def _cmd_estimate(args) -> int:
    theta = _parse_param(args.theta, args.family)
    theta2 = _parse_param(args.theta2, args.family)
    f = FGenerator.by_name(args.measure)
    stream = RngStream(args.seed, _STREAM_ESTIMATE)
    shards = args.shards
    if args.family == "poincare":
        est = estimate_for_poincare(
            f, theta, theta2, args.method, args.n, stream,
            sigma=args.sigma, eps=args.eps, shards=shards,
        )
    else:
        if theta.d != 2 or theta2.d != 2:
            raise CliError(EXIT_BAD_DIMENSION, "estimators are implemented for d=2 only")
        if args.method == "plugin":
            est = estimate_plugin(f, theta, theta2, args.n, stream.derive(11), shards=shards)
        elif args.method == "mc2":
            est = estimate_mc2(f, theta, theta2, args.n, stream.derive(14), eps=args.eps, shards=shards)
        else:
            kind = "logistic" if args.method == "mc1-logistic" else "student_t7"
            sigma = args.sigma
            if sigma is None:
                sigma = optimize_sigma(f, theta, theta2, kind, 200_000, stream.derive(101))
            est = estimate_mc1(
                f, theta, theta2, Proposal(kind, sigma), args.n,
                stream.derive(12 if kind == "logistic" else 13), shards=shards,
            )
    payload = {
        "measure": args.measure,
        "method": args.method,
        "estimate": est.estimate,
        "sample_variance": est.sample_variance,
        "n": est.n,
        "seed": args.seed,
        "shards": shards,
        "ci95": list(est.ci95),
        "sigma": est.sigma,
        "sup_bound": est.sup_bound,
        "tail_index": est.tail_index,
        "heavy_tail": est.heavy_tail,
    }
    _emit(payload, args.out)
    if args.verify:
        closed = _CLOSED_FORMS[args.family].get(args.measure)
        if closed is None:
            raise CliError(EXIT_BAD_PARAMS, f"--verify has no closed form for {args.measure}")
        target = closed(theta, theta2)
        se = math.sqrt(est.sample_variance / est.n) if est.n > 1 else math.inf
        if not math.isfinite(target) or abs(est.estimate - target) > 4.0 * se:
            sys.stderr.write(
                f"verification failed: estimate {est.estimate} vs closed form {target} "
                f"(4 SE = {4.0 * se})\n"
            )
            return 1
    return EXIT_OK


def _read_points_csv(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        rows = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if rows and not rows[0][0].lstrip("-+").replace(".", "").isdigit():
        rows = rows[1:]  # column header
    return np.loadtxt(rows, delimiter=",", ndmin=2)


def _cmd_fit(args) -> int:
    try:
        pts = _read_points_csv(args.input)
    except (OSError, ValueError) as err:
        raise CliError(EXIT_BAD_PARAMS, f"cannot read points from {args.input}: {err}")
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise CliError(EXIT_BAD_PARAMS, f"expected two CSV columns, got shape {pts.shape}")
    stream = RngStream(args.seed, _STREAM_FIT)
    try:
        mixture, trace = em_fit(pts, args.k, args.family, stream)
    except FitError as err:
        raise CliError(EXIT_FIT_FAILURE, f"EM failed: {err}")
    if args.family == "poincare":
        comps = [[c.a, c.b, c.c] for c in mixture.components]
        d = 2
    else:
        comps = [list(c.theta) for c in mixture.components]
        d = mixture.components[0].d
    payload = {
        "family": args.family,
        "d": d,
        "weights": list(mixture.weights),
        "components": comps,
        "loglik": trace.loglik[-1],
        "iterations": trace.iterations,
    }
    _emit(payload, args.out)
    return EXIT_OK


_MODELS = ("upper-half", "hyperboloid", "disk")


def _cmd_convert(args) -> int:
    try:
        value = json.loads(args.value)
    except json.JSONDecodeError as err:
        raise CliError(EXIT_BAD_PARAMS, f"unparseable value {args.value!r}: {err}")
    src, dst = args.src, args.dst
    if src not in _MODELS or dst not in _MODELS:
        raise CliError(EXIT_BAD_PARAMS, f"models must be one of {_MODELS}")
    try:
        if args.what == "param":
            if "disk" in (src, dst):
                raise CliError(EXIT_BAD_PARAMS, "parameter conversion covers upper-half <-> hyperboloid")
            if src == dst:
                out = value
            elif src == "upper-half":
                theta = _parse_param(args.value, "poincare")
                out = list(param_h_to_l(theta).theta)
            else:
                theta = _parse_param(args.value, "hyperboloid")
                if theta.d != 2:
                    raise CliError(EXIT_BAD_DIMENSION, "parameter conversion needs d=2")
                s = param_l_to_h(theta)
                out = [[s.a, s.b], [s.b, s.c]]
        else:
            arr = np.asarray(value, dtype=float)
            if arr.shape != (2,):
                raise CliError(EXIT_BAD_PARAMS, f"points are 2-vectors, got {args.value!r}")
            if src == dst:
                out = list(arr)
            else:
                if src == "upper-half":
                    z = UpperHalfPoint(arr[0], arr[1])
                elif src == "hyperboloid":
                    z = point_l_to_h(HyperboloidPoint(arr))
                else:
                    z = point_disk_to_h(arr[0], arr[1])
                if dst == "upper-half":
                    out = [z.x, z.y]
                elif dst == "hyperboloid":
                    out = list(point_h_to_l(z).coords)
                else:
                    out = list(point_h_to_disk(z))
    except (ConeError, ValueError) as err:
        if isinstance(err, CliError):
            raise
        raise CliError(EXIT_BAD_PARAMS, str(err))
    _emit({"what": args.what, "from": src, "to": dst, "value": out}, args.out)
    return EXIT_OK


def _add_family(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=("poincare", "hyperboloid"), default="poincare")


def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="write output to a file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperstat", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("divergence", help="closed-form divergence between two parameters")
    _add_family(p)
    p.add_argument("--measure", required=True,
                   choices=("kl", "hellinger", "neyman", "jeffreys", "skew-jensen", "chernoff"))
    p.add_argument("--theta", required=True)
    p.add_argument("--theta2", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    _add_out(p)
    p.set_defaults(func=_cmd_divergence)

    p = sub.add_parser("entropy", help="differential and invariant-measure entropies")
    _add_family(p)
    p.add_argument("--theta", required=True)
    _add_out(p)
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("fim", help="Fisher information matrix")
    _add_family(p)
    p.add_argument("--theta", required=True)
    _add_out(p)
    p.set_defaults(func=_cmd_fim)

    p = sub.add_parser("invariant", help="maximal-invariant triple of a pair")
    _add_family(p)
    p.add_argument("--theta", required=True)
    p.add_argument("--theta2", required=True)
    _add_out(p)
    p.set_defaults(func=_cmd_invariant)

    p = sub.add_parser("sample", help="draw variates as CSV")
    _add_family(p)
    p.add_argument("--theta", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_out(p)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("estimate", help="Monte Carlo divergence estimate")
    _add_family(p)
    p.add_argument("--measure", required=True, choices=("tv", "kl", "hellinger", "neyman"))
    p.add_argument("--method", required=True,
                   choices=("plugin", "mc1-logistic", "mc1-t7", "mc2"))
    p.add_argument("--theta", required=True)
    p.add_argument("--theta2", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--verify", action="store_true",
                   help="exit nonzero if the estimate is more than 4 SE from the closed form")
    _add_out(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("fit", help="EM mixture fit from a CSV of points")
    _add_family(p)
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_out(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("convert", help="convert parameters/points between models")
    p.add_argument("--what", required=True, choices=("param", "point"))
    p.add_argument("--from", dest="src", required=True)
    p.add_argument("--to", dest="dst", required=True)
    p.add_argument("--value", required=True)
    _add_out(p)
    p.set_defaults(func=_cmd_convert)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        sys.stderr.write(f"hyperstat: {err}\n")
        return err.code
    except ConeError as err:
        sys.stderr.write(f"hyperstat: parameter outside its cone: {err}\n")
        return EXIT_BAD_PARAMS


if __name__ == "__main__":
    sys.exit(main())
