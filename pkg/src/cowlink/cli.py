"""Command-line client for the simulation service.

Subcommands run experiments and write their data files locally; the
computation itself happens behind the HTTP API. Without ``--server``
the service app is driven in-process, so no daemon is needed for
desk-scale runs.

Exit codes: 0 success, 2 config error, 3 session abort, 4 I/O error.
"""

from __future__ import annotations

import argparse
import base64
import sys
from pathlib import Path

import httpx

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cowlink",
        description="Coherent one-way QKD link simulator (thin client)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", help="hex seed, e.g. 0x5eed")
        p.add_argument("--out", help="output path (prefix for session)")
        p.add_argument("--server", help="remote service URL; default in-process")

    p = sub.add_parser("sweep", help="distance sweep CSV")
    common(p)
    p.add_argument("--slots", type=int, help="Monte Carlo slots per length")
    p.add_argument(
        "--analytic-only", action="store_true", help="skip simulated columns"
    )

    p = sub.add_parser("session", help="full key-exchange session")
    common(p)

    p = sub.add_parser("align", help="alignment trace CSV")
    common(p)

    p = sub.add_parser("predict", help="analytic rate prediction")
    common(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _collect_overrides(extras: list[str]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for token in extras:
        if not token.startswith("--") or "=" not in token:
            raise ValueError(f"unrecognized argument: {token}")
        key, value = token[2:].split("=", 1)
        if not key or "." not in key:
            raise ValueError(f"override must look like --section.key=value: {token}")
        overrides[key] = value
    return overrides


def _post(server: str | None, path: str, config: dict[str, str]) -> dict:
    """POST one experiment request, remotely or to the in-process app."""
    payload = {"config": config}
    if server:
        with httpx.Client(base_url=server, timeout=3600.0) as client:
            response = client.post(path, json=payload)
    else:
        import asyncio

        from .service.app import app

        async def _in_process() -> httpx.Response:
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://cowlink.local", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        response = asyncio.run(_in_process())
    if response.status_code in (400, 422):
        detail = response.json().get("detail", response.text)
        print(f"config error: {detail}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    response.raise_for_status()
    return response.json()


def _write(path: Path, data: bytes | str) -> None:
    try:
        if isinstance(data, str):
            path.write_text(data, encoding="utf-8")
        else:
            path.write_bytes(data)
    except OSError as exc:
        print(f"cannot write {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args, extras = parser.parse_known_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    try:
        overrides = _collect_overrides(extras)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG

    config: dict[str, str] = {}
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return EXIT_IO
        from .config import parse_config_text
        from .errors import ConfigError

        try:
            config.update(parse_config_text(text))
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    config.update(overrides)
    if args.seed:
        config["seed"] = args.seed
    if args.command == "sweep":
        if args.slots is not None:
            config["sweep.slots"] = str(args.slots)
        if args.analytic_only:
            config["sweep.analytic_only"] = "true"

    try:
        if args.command == "predict":
            data = _post(args.server, "/v1/predict", config)
            _write(Path(args.out or "predict.csv"), data["csv"])
            row = data["rows"][0]
            print(
                f"{row['length_km']:g} km: loss {row['total_loss_db']:.2f} dB, "
                f"QBER {100 * row['qber']:.3f}%, "
                f"secret {row['secret_rate_hz']:.3f} bit/s"
            )
        elif args.command == "sweep":
            data = _post(args.server, "/v1/sweep", config)
            out = Path(args.out or "sweep.csv")
            _write(out, data["csv"])
            print(f"wrote {len(data['rows'])} rows to {out}")
        elif args.command == "align":
            data = _post(args.server, "/v1/align", config)
            out = Path(args.out or "align.csv")
            _write(out, data["csv"])
            print(
                f"stages {'>'.join(data['stages'])}; "
                f"visibility {data['resulting_visibility']:.4f}; wrote {out}"
            )
        elif args.command == "session":
            data = _post(args.server, "/v1/session", config)
            prefix = args.out or "session"
            _write(Path(f"{prefix}.csv"), data["report_csv"])
            _write(
                Path(f"{prefix}.transcript.bin"),
                base64.b64decode(data["transcript_b64"]),
            )
            print(data["summary"], end="")
            if data["aborted"]:
                return EXIT_ABORT
    except SystemExit as exit_request:
        return int(exit_request.code or 0)
    except httpx.HTTPError as exc:
        print(f"service error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
