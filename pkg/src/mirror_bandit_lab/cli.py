"""Command-line client for the simulation service.

The CLI talks HTTP to the FastAPI app: in-process by default (no server
needed), or to a remote instance via ``--server``. Exit codes: 0 success,
1 configuration error, 2 numeric failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_IO = 3

_KIND_TO_EXIT = {"config": EXIT_CONFIG, "numeric": EXIT_NUMERIC, "io": EXIT_IO}


class _Parser(argparse.ArgumentParser):
    """argparse, but usage errors land on stderr with exit code 1."""

    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mbl", description=__doc__)
    parser.add_argument("--server", help="URL of a running service; default is in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="one episode, prints the run summary JSON")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--rep", type=int, default=0, help="replication index (default 0)")

    mc_p = sub.add_parser("mc", help="Monte-Carlo sweep, writes rows + aggregate JSON")
    mc_p.add_argument("--config", required=True)
    mc_p.add_argument("--out", help="output directory (overrides config out_dir)")
    mc_p.add_argument("--reps", type=int)
    mc_p.add_argument("--seed", type=int)
    mc_p.add_argument("--workers", type=int)
    mc_p.add_argument("--format", choices=["csv", "json"], default="csv")
    mc_p.add_argument("--no-rows", action="store_true", help="skip per-round rows")

    sch_p = sub.add_parser("schedule", help="print the resolved schedule for a config")
    sch_p.add_argument("--config", required=True)

    sub.add_parser("selftest", help="run the built-in property suites")

    serve_p = sub.add_parser("serve", help="serve the HTTP API with uvicorn")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    return parser


def _load_config_dict(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            print(f"error: invalid JSON in {path}: {exc}", file=sys.stderr)
            raise SystemExit(EXIT_CONFIG) from exc
    if not isinstance(data, dict):
        print(f"error: config root must be a JSON object in {path}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    return data


def _make_client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _fail_from_response(resp) -> int:
    try:
        body = resp.json()
    except Exception:
        body = {}
    err = body.get("error")
    if err:
        print(f"error ({err.get('kind')}): {err.get('message')}", file=sys.stderr)
        return _KIND_TO_EXIT.get(err.get("kind"), EXIT_NUMERIC)
    if resp.status_code == 422:  # request-model validation
        print(f"error (config): {json.dumps(body.get('detail'))}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"error: HTTP {resp.status_code}: {resp.text[:500]}", file=sys.stderr)
    return EXIT_NUMERIC


def main(argv=None) -> int:
    try:
        return _dispatch(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG


def _dispatch(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK

    try:
        if args.command == "selftest":
            with _make_client(args.server) as client:
                resp = client.post("/selftest")
                if resp.status_code != 200:
                    return _fail_from_response(resp)
                report = resp.json()
                print(json.dumps(report, indent=2))
                return EXIT_OK if report["ok"] else EXIT_NUMERIC

        config = _load_config_dict(args.config)
        if getattr(args, "seed", None) is not None:
            config["seed"] = args.seed
        if getattr(args, "reps", None) is not None:
            config["reps"] = args.reps

        with _make_client(args.server) as client:
            if args.command == "schedule":
                payload = {
                    "T": config.get("T"),
                    "K": config.get("K"),
                    "alpha": config.get("alpha", 1.0),
                    "mode": config.get("mode", "uncorrupted"),
                    "beta": config.get("beta"),
                    "gamma_override": config.get("gamma_override"),
                }
                resp = client.post("/schedule", json=payload)
            elif args.command == "run":
                resp = client.post("/run", json={"config": config, "rep_index": args.rep})
            else:  # mc
                out_dir = args.out or config.get("out_dir")
                if not out_dir:
                    print("error: no output directory (--out or config out_dir)", file=sys.stderr)
                    return EXIT_CONFIG
                workers = args.workers or int(os.environ.get("MBL_WORKERS", "1"))
                resp = client.post(
                    "/mc",
                    json={
                        "config": config,
                        "out_dir": out_dir,
                        "workers": workers,
                        "format": args.format,
                        "write_rows": not args.no_rows,
                    },
                )
            if resp.status_code != 200:
                return _fail_from_response(resp)
            print(json.dumps(resp.json(), indent=2))
            return EXIT_OK
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
