"""Command-line frontend.

A thin client over the service layer: every subcommand builds a request
model and dispatches it either in-process (default) or to a running server
(--server URL).  Numbers go to stdout; CSV artifacts go to files.

Exit codes: 0 success, 1 validation error, 2 runtime error, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from .errors import AdisError, ConfigError, ModelFormatError, ModelValidationError
from .reporting import render_kv_csv
from .sampling import DEFAULT_SEED
from .service import handlers, schemas

USAGE_EXIT = 64
VALIDATION_EXIT = 1
RUNTIME_EXIT = 2

_VALIDATION_ERRORS = (ModelFormatError, ModelValidationError, ConfigError)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def _read_model(path: str) -> dict[str, Any]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ModelFormatError(f"{path}: top level must be a JSON object")
    return obj


def parse_evidence(spec: str | None) -> dict[str, int]:
    """Parse 'X2=1,X1=0' into an assignment."""
    if not spec:
        return {}
    evidence: dict[str, int] = {}
    for item in spec.split(","):
        name, eq, value = item.partition("=")
        name = name.strip()
        if not eq or not name:
            raise ConfigError(f"bad evidence item '{item}', expected NAME=VALUE")
        try:
            evidence[name] = int(value)
        except ValueError:
            raise ConfigError(f"evidence value for '{name}' must be an integer, "
                              f"got '{value}'") from None
    return evidence


class Client:
    """Dispatches requests in-process or to a remote server."""

    def __init__(self, server: str | None = None):
        self.server = server.rstrip("/") if server else None

    def call(self, endpoint: str, request, response_type):
        if self.server is None:
            handler = getattr(handlers, f"handle_{endpoint}")
            return handler(request)
        return self._remote(endpoint, request, response_type)

    def _remote(self, endpoint: str, request, response_type):
        import httpx

        reply = httpx.post(f"{self.server}/{endpoint}",
                           json=request.model_dump(mode="json"), timeout=600.0)
        if reply.status_code == 200:
            return response_type.model_validate(reply.json())
        detail = reply.json().get("detail")
        if isinstance(detail, dict) and detail.get("kind") == "runtime":
            raise AdisError(detail.get("message", reply.text))
        if isinstance(detail, dict):
            raise ModelValidationError(detail.get("message", reply.text))
        raise ConfigError(f"server rejected the request: {reply.text}")


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_validate(args, client: Client) -> int:
    req = schemas.ValidateRequest(model=_read_model(args.model))
    resp = client.call("validate", req, schemas.ValidateResponse)
    if resp.valid:
        print("OK")
        return 0
    for violation in resp.violations:
        print(violation)
    return VALIDATION_EXIT


def _cmd_exact(args, client: Client) -> int:
    req = schemas.ExactRequest(model=_read_model(args.model),
                               evidence=parse_evidence(args.evidence),
                               action=args.action, variance=args.variance)
    resp = client.call("exact", req, schemas.ExactResponse)
    print(repr(resp.value))
    pairs: list[tuple[str, object]] = [("true_value", resp.value)]
    if resp.prior_weight_variance is not None:
        print(f"prior_weight_variance={resp.prior_weight_variance!r}")
        pairs.append(("prior_weight_variance", resp.prior_weight_variance))
    if args.output:
        _write(args.output, render_kv_csv(pairs))
    return 0


def _cmd_estimate(args, client: Client) -> int:
    req = schemas.EstimateRequest(model=_read_model(args.model),
                                  evidence=parse_evidence(args.evidence),
                                  action=args.action, samples=args.samples,
                                  seed=args.seed)
    resp = client.call("estimate", req, schemas.EstimateResponse)
    print(repr(resp.estimate))
    print(f"seed={resp.seed}")
    if args.output:
        _write(args.output, render_kv_csv([
            ("estimate", resp.estimate),
            ("samples", resp.samples),
            ("seed", resp.seed),
        ]))
    return 0


def _cmd_adapt(args, client: Client) -> int:
    req = schemas.AdaptRequest(model=_read_model(args.model),
                               evidence=parse_evidence(args.evidence),
                               action=args.action, method=args.method,
                               updates=args.updates, batch=args.batch,
                               beta=args.beta, gamma=args.gamma,
                               projection=args.projection, seed=args.seed)
    resp = client.call("adapt", req, schemas.AdaptResponse)
    print(repr(resp.estimate))
    print(f"seed={resp.seed}")
    _write(args.output, resp.trace_csv)
    return 0


def _cmd_experiment(args, client: Client) -> int:
    config_path = Path(args.config)
    try:
        config = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}: invalid JSON: {exc}") from exc
    if isinstance(config, dict) and isinstance(config.get("model"), str):
        # model given as a path, relative to the config file
        model_path = config_path.parent / config["model"]
        config = {**config, "model": _read_model(str(model_path))}
    req = schemas.ExperimentRequest(config=config)
    resp = client.call("experiment", req, schemas.ExperimentResponse)
    print(f"master_seed={resp.master_seed}")
    _write(resp.outputs["mse"], resp.mse_csv)
    _write(resp.outputs["variance"], resp.variance_csv)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="adis",
                     description="Importance-sampling estimation for discrete "
                                 "Bayesian networks and influence diagrams")
    parser.add_argument("--server", metavar="URL", default=None,
                        help="dispatch to a running adis service instead of in-process")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model", help="model JSON file")
    p.set_defaults(func=_cmd_validate)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("model", help="model JSON file")
        p.add_argument("--evidence", default="", metavar="X=v,...",
                       help="comma-separated observed values")
        p.add_argument("--action", type=int, default=None,
                       help="action index (influence diagrams)")

    p = sub.add_parser("exact", help="exact value by enumeration")
    common(p)
    p.add_argument("--variance", action="store_true",
                   help="also report the prior sampler's weight variance")
    p.add_argument("--output", default=None, help="optional CSV output path")
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("estimate", help="likelihood-weighting estimate")
    common(p)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--output", default=None, help="optional CSV output path")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("adapt", help="adaptive importance-sampling estimate")
    common(p)
    p.add_argument("--method", default="var",
                   choices=["var", "l2", "kl1", "kl2", "kls", "local-l2",
                            "local-kl1", "local-kl2", "local-kls", "sis"])
    p.add_argument("--updates", type=int, required=True, metavar="T")
    p.add_argument("--batch", type=int, default=1, metavar="N")
    p.add_argument("--beta", type=float, default=None,
                   help="learning-rate numerator (default depends on the method)")
    p.add_argument("--gamma", type=float, default=0.1,
                   help="probability floor factor (floor is gamma/arity)")
    p.add_argument("--projection", choices=["mean", "literal"], default="mean")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--output", default="trace.csv", help="trace CSV path")
    p.set_defaults(func=_cmd_adapt)

    p = sub.add_parser("experiment", help="run a replicated experiment from a config file")
    p.add_argument("config", help="experiment config JSON file")
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    client = Client(args.server)
    try:
        return args.func(args, client)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT
    except AdisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
