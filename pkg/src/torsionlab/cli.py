"""Command-line interface: deterministic pipelines with content-addressed caching.

Subcommands: torsion, asymmetry, deficit, certify, sweep, calibrate.  Exit
codes: 0 success, 2 validation error (bad flags, unreadable specs), 3
solver failure.  Results are cached under --cache-dir (or the
TORSIONLAB_CACHE environment variable, which wins) keyed by the SHA-256 of
the canonical JSON of command + inputs + tool version; identical
invocations are served from cache and write byte-identical reports.
"""

from __future__ import annotations

import argparse
import fcntl
import hashlib
import json
import math
import os
import sys

from . import __version__
from .asymmetry import fraenkel
from .brownian import WosConfig, PathConfig, grid_torsion, wos_lifetime
from .certify import (
    Certificate,
    certify_fractional,
    certify_norm,
    certify_point,
    check_rearrangement,
    deficit_lp,
    deficit_point,
)
from .errors import SolverError, TorsionlabError, ValidationError
from .fields import ScalarField
from .geometry import Ellipse, parse_domain_spec, scale, volume
from .levels import distribution_function
from .stable import FractionalConfig, calibrate_ball_amplitude


def canonical_json(obj) -> str:
    """Sorted keys, compact separators, shortest round-trip numerals."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def cache_key(inputs: dict) -> str:
    return hashlib.sha256(canonical_json(inputs).encode("utf-8")).hexdigest()


def cache_lookup(key: str, cache_dir: str) -> dict | None:
    """Return the stored payload, or None on miss or corrupt entry."""
    path = os.path.join(cache_dir, key + ".json")
    if not os.path.exists(path):
        return None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            entry = json.load(fh)
        if cache_key(entry["inputs"]) != key:
            raise ValueError("stored inputs do not hash to the entry key")
        return entry["payload"]
    except (ValueError, KeyError, OSError) as exc:
        print(f"warning: ignoring corrupt cache entry {key}: {exc}", file=sys.stderr)
        return None


def cache_store(key: str, inputs: dict, payload, cache_dir: str) -> None:
    """Atomic write-then-rename so concurrent writers never tear entries."""
    os.makedirs(cache_dir, exist_ok=True)
    entry = {
        "inputs": inputs,
        "payload": payload,
        "version": __version__,
        "timestamp": 0,  # reports must not depend on wall-clock time
    }
    path = os.path.join(cache_dir, key + ".json")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(entry))
    os.replace(tmp, path)


class _CacheLock:
    """Advisory exclusive lock on the cache directory for the run's duration."""

    def __init__(self, cache_dir: str):
        os.makedirs(cache_dir, exist_ok=True)
        self._fh = open(os.path.join(cache_dir, ".lock"), "w")

    def __enter__(self):
        fcntl.flock(self._fh, fcntl.LOCK_EX)
        return self

    def __exit__(self, *exc):
        fcntl.flock(self._fh, fcntl.LOCK_UN)
        self._fh.close()


def _parse_point(text: str, n: int):
    parts = [p for p in text.split(",") if p.strip()]
    try:
        coords = [float(p) for p in parts]
    except ValueError as exc:
        raise ValidationError(f"bad point '{text}': {exc}") from None
    if len(coords) != n:
        raise ValidationError(f"point has {len(coords)} coordinates, domain has {n}")
    return coords


def _parse_p(text: str) -> float:
    if text.strip().lower() == "inf":
        return math.inf
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"bad norm exponent '{text}'") from None
    if value < 1.0:
        raise ValidationError("norm exponent must be >= 1 or inf")
    return value


def _load_domain(path: str):
    if path is None:
        raise ValidationError("--domain is required for this command")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read domain spec: {exc}") from None
    return parse_domain_spec(text)


def _parse_eps_list(text: str):
    if not text or not text.strip():
        raise ValidationError("empty sweep: no flattening values given")
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad flattening list '{text}': {exc}") from None
    if not values:
        raise ValidationError("empty sweep: no flattening values given")
    if any(v <= 0.0 for v in values):
        raise ValidationError("flattenings must be positive")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torsionlab",
        description="expected-lifetime solvers and deficit certificates",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--domain", help="path to a domain spec JSON file")
        p.add_argument("--grid-res", type=int, default=256)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--cache-dir", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=["csv", "json", "svg-data"],
                       default="json")
        p.add_argument("--beta-n", type=float, default=0.1)
        p.add_argument("--theta", type=float, default=None)
        p.add_argument("--wos-paths", type=int, default=None)
        p.add_argument("--wos-eps", type=float, default=None)
        p.add_argument("--point", default=None, help="X,Y[,Z]")
        p.add_argument("--p", default=None, help="norm exponent or 'inf'")
        p.add_argument("--alpha", type=float, default=None)

    for name in ("torsion", "asymmetry", "deficit", "certify", "sweep",
                 "calibrate"):
        p = sub.add_parser(name)
        common(p)
        if name == "certify" or name == "sweep":
            p.add_argument("--theorem", choices=["1", "2", "3", "psz"],
                           required=True)
        if name == "sweep":
            p.add_argument("--eps", required=True,
                           help="comma-separated ellipse flattenings")
        if name == "calibrate":
            p.add_argument("--n", type=int, default=2)
            p.add_argument("--dt", type=float, default=2e-4)
            p.add_argument("--t-max", type=float, default=10.0)
    return parser


# ---------------------------------------------------------------------------
# command payloads (JSON-serializable dicts; caching operates on these)


def _certificate_inputs(args, extra: dict) -> dict:
    base = {
        "command": args.command,
        "version": __version__,
        "seed": args.seed,
        "grid_res": args.grid_res,
        "beta_n": args.beta_n,
        "theta": args.theta,
    }
    base.update(extra)
    return base


def _cert_payload(cert: Certificate) -> dict:
    return json.loads(cert.to_json())


def _run_certify_one(theorem: str, domain, args) -> dict:
    if theorem == "1":
        point = _parse_point(args.point or "0,0", domain.n)
        cert = certify_point(domain, point, beta=args.beta_n,
                             theta=args.theta if args.theta is not None else 0.25,
                             resolution=args.grid_res, seed=args.seed)
    elif theorem == "2":
        if args.p is None:
            raise ValidationError("--p is required for theorem 2")
        cert = certify_norm(domain, _parse_p(args.p), beta=args.beta_n,
                            theta=args.theta if args.theta is not None else 0.25,
                            resolution=args.grid_res, seed=args.seed)
    elif theorem == "3":
        if args.alpha is None:
            raise ValidationError("--alpha is required for theorem 3")
        paths = args.wos_paths if args.wos_paths is not None else 128
        cfg = FractionalConfig(alpha=args.alpha, paths=paths, seed=args.seed)
        cert = certify_fractional(domain, args.alpha, cfg,
                                  resolution=args.grid_res,
                                  theta=args.theta if args.theta is not None else 1.0 / 9.0,
                                  seed=args.seed)
    else:
        if args.alpha is None:
            raise ValidationError("--alpha is required for the rearrangement check")
        cert = check_rearrangement(domain, args.alpha,
                                   resolution=args.grid_res,
                                   theta=args.theta if args.theta is not None else 0.25,
                                   seed=args.seed)
    return _cert_payload(cert)


def _compute(args) -> tuple[dict, dict]:
    """Run the requested pipeline; returns (cache inputs, payload)."""
    cmd = args.command
    if cmd == "torsion":
        domain = _load_domain(args.domain)
        inputs = _certificate_inputs(args, {"domain": domain.spec_dict()})
        field = grid_torsion(domain, args.grid_res)
        payload = {"kind": "field", "field": json.loads(field.to_json())}
        return inputs, payload
    if cmd == "asymmetry":
        domain = _load_domain(args.domain)
        inputs = _certificate_inputs(args, {"domain": domain.spec_dict()})
        result = fraenkel(domain)
        payload = {"kind": "asymmetry", "result": json.loads(result.to_json())}
        return inputs, payload
    if cmd == "deficit":
        domain = _load_domain(args.domain)
        extra = {"domain": domain.spec_dict(), "point": args.point, "p": args.p,
                 "wos_paths": args.wos_paths, "wos_eps": args.wos_eps}
        inputs = _certificate_inputs(args, extra)
        if args.point is not None:
            point = _parse_point(args.point, domain.n)
            if args.wos_paths is not None:
                cfg = WosConfig(paths=args.wos_paths, seed=args.seed,
                                boundary_eps=args.wos_eps)
                value = deficit_point(domain, point, solver="wos", cfg=cfg)
            else:
                value = deficit_point(domain, point, resolution=args.grid_res)
            payload = {"kind": "deficit", "mode": "point", "value": value}
        elif args.p is not None:
            value = deficit_lp(domain, _parse_p(args.p), resolution=args.grid_res)
            payload = {"kind": "deficit", "mode": "lp", "value": value}
        else:
            raise ValidationError("deficit needs --point or --p")
        return inputs, payload
    if cmd == "certify":
        domain = _load_domain(args.domain)
        extra = {"domain": domain.spec_dict(), "theorem": args.theorem,
                 "p": args.p, "alpha": args.alpha, "point": args.point,
                 "wos_paths": args.wos_paths}
        inputs = _certificate_inputs(args, extra)
        payload = {"kind": "certificates",
                   "certificates": [_run_certify_one(args.theorem, domain, args)]}
        return inputs, payload
    if cmd == "sweep":
        eps_values = _parse_eps_list(args.eps)
        extra = {"theorem": args.theorem, "eps": eps_values, "p": args.p,
                 "alpha": args.alpha, "point": args.point,
                 "wos_paths": args.wos_paths}
        inputs = _certificate_inputs(args, extra)
        certs = []
        for eps in eps_values:
            dom = Ellipse.from_flattening(eps)
            if args.theorem == "3":
                v = volume(dom).value
                dom = scale(dom, v ** (-1.0 / dom.n))
            cert = _run_certify_one(args.theorem, dom, args)
            cert["sweep_param"] = eps
            certs.append(cert)
        payload = {"kind": "certificates", "certificates": certs}
        return inputs, payload
    if cmd == "calibrate":
        if args.alpha is None:
            raise ValidationError("--alpha is required for calibrate")
        paths = args.wos_paths if args.wos_paths is not None else 20000
        extra = {"alpha": args.alpha, "n": args.n, "dt": args.dt,
                 "t_max": args.t_max, "paths": paths}
        inputs = _certificate_inputs(args, extra)
        cfg = PathConfig(dt=args.dt, paths=paths, t_max=args.t_max,
                         seed=args.seed)
        est = calibrate_ball_amplitude(args.n, args.alpha, cfg)
        payload = {"kind": "calibration", "value": est.value,
                   "stderr": est.stderr, "paths": est.paths,
                   "warning": est.warning}
        return inputs, payload
    raise ValidationError(f"unknown command '{cmd}'")


# ---------------------------------------------------------------------------
# report writing


_CSV_HEADER = "param,theorem,p_or_alpha,lhs,rhs,margin,sigma,passed,seed"


def _csv_rows(certs: list[dict]) -> str:
    lines = [_CSV_HEADER]
    for cert in certs:
        params = cert.get("params", {})
        p_or_alpha = params.get("p", params.get("alpha", ""))
        param = cert.get("sweep_param", "")
        lines.append(",".join([
            repr(param) if param != "" else "",
            str(cert["theorem"]),
            str(p_or_alpha),
            repr(cert["lhs"]),
            repr(cert["rhs"]),
            repr(cert["margin"]),
            repr(cert["sigma"]),
            str(cert["passed"]).lower(),
            str(cert["seed"]),
        ]))
    return "\n".join(lines) + "\n"


def _polyline(xs, ys, labels: str) -> str:
    lines = [f"# {labels}"]
    for x, y in zip(xs, ys):
        lines.append(f"{x!r} {y!r}")
    return "\n".join(lines) + "\n"


def write_report(payload: dict, fmt: str, out: str | None) -> str:
    """Render the payload; writes to `out` when given, returns the text."""
    kind = payload.get("kind")
    if kind == "certificates" and not payload["certificates"]:
        raise ValidationError("empty report: no certificates")
    if fmt == "json":
        text = canonical_json(payload)
    elif fmt == "csv":
        if kind == "certificates":
            text = _csv_rows(payload["certificates"])
        elif kind == "field":
            field = ScalarField.from_json(canonical_json(payload["field"]))
            text = field.to_csv()
        elif kind == "deficit" or kind == "calibration":
            value = payload["value"]
            stderr = payload.get("stderr", "")
            text = "value,stderr\n" + f"{value!r},{stderr!r}\n"
        elif kind == "asymmetry":
            res = payload["result"]
            text = "value,center\n" + f"{res['value']!r},\"{res['center']}\"\n"
        else:
            raise ValidationError(f"no CSV layout for payload kind '{kind}'")
    elif fmt == "svg-data":
        if kind == "certificates":
            certs = payload["certificates"]
            xs = [c.get("sweep_param", i) for i, c in enumerate(certs)]
            ys = [c["lhs"] for c in certs]
            text = _polyline(xs, ys, "eps deficit")
        elif kind == "field":
            field = ScalarField.from_json(canonical_json(payload["field"]))
            mu = distribution_function(field)
            text = _polyline(mu.levels.tolist(), mu.volumes.tolist(), "t mu")
        else:
            raise ValidationError(f"no polyline layout for payload kind '{kind}'")
    else:
        raise ValidationError(f"unknown format '{fmt}'")
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise ValidationError(f"cannot write report: {exc}") from None
    return text


def run(argv=None) -> int:
    """Execute one CLI request; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cache_dir = os.environ.get("TORSIONLAB_CACHE") or args.cache_dir
        inputs, payload = None, None
        if cache_dir:
            with _CacheLock(cache_dir):
                inputs, payload = _compute_cached(args, cache_dir)
        else:
            inputs, payload = _compute(args)
        text = write_report(payload, args.format, args.out)
        if not args.out:
            sys.stdout.write(text)
            if not text.endswith("\n"):
                sys.stdout.write("\n")
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except TorsionlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _compute_cached(args, cache_dir: str):
    # probe with the input fingerprint before doing any work
    probe = _input_fingerprint(args)
    key = cache_key(probe)
    hit = cache_lookup(key, cache_dir)
    if hit is not None:
        return probe, hit
    inputs, payload = _compute(args)
    # the fingerprint covers everything _compute consumed, so store under it
    cache_store(key, probe, payload, cache_dir)
    return inputs, payload


def _input_fingerprint(args) -> dict:
    """Everything that can influence the payload, before loading files."""
    fp = {"command": args.command, "version": __version__}
    for name in ("grid_res", "seed", "beta_n", "theta", "p", "alpha", "point",
                 "wos_paths", "wos_eps", "theorem", "eps", "n", "dt", "t_max"):
        if hasattr(args, name):
            fp[name] = getattr(args, name)
    if getattr(args, "domain", None):
        domain = _load_domain(args.domain)
        fp["domain"] = domain.spec_dict()
    return fp


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
