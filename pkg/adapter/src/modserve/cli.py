"""Command line entry points.

    modserve serve        load the registry from a config, warm the
                          models, serve until interrupted
    modserve conformance  replay a fixture suite against a service URL
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .conformance import TIERS, http_transport, load_suite, run_cases, summarize
from .errors import AdapterError
from .registry import load_config, registry_from_config, serve_address
from .service import build_service


def _cmd_serve(args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    config = load_config(config_path)
    registry = registry_from_config(config, base_dir=config_path.parent)
    host, port = serve_address(config, host=args.host, port=args.port)
    if not args.lazy:
        registry.warmup()
    server = build_service(registry, host=host, port=port)
    host, port = server.server_address[:2]
    print(f"serving {registry.store.root} on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
    return 0


def _cmd_conformance(args: argparse.Namespace) -> int:
    suite = load_suite(args.suite)
    tiers = tuple(t.strip() for t in args.tiers.split(",") if t.strip())
    unknown = set(tiers) - set(TIERS)
    if unknown:
        print(f"unknown tiers: {', '.join(sorted(unknown))}", file=sys.stderr)
        return 2
    outcomes = run_cases(suite, http_transport(args.url), tiers=tiers)
    print(summarize(outcomes))
    return 0 if all(o.ok for o in outcomes) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modserve", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="serve the configured models")
    p.add_argument("--config", required=True, help="registry config JSON")
    p.add_argument("--host", help="overrides the config file (default 127.0.0.1)")
    p.add_argument("--port", type=int, help="overrides the config file (default 8801)")
    p.add_argument(
        "--lazy", action="store_true",
        help="skip warmup; models load on their first request",
    )
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("conformance", help="check a running service against a suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--url", required=True)
    p.add_argument("--tiers", default="protocol", help="comma-separated: protocol,oracle")
    p.set_defaults(func=_cmd_conformance)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AdapterError as exc:
        print(f"modserve: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
