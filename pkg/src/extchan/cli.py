"""``extsh``: run a channel script, optionally with pre-opened channels."""
from __future__ import annotations

import argparse
import logging
import sys

from .channels import ChannelRegistry
from .embed import DEFAULT_HANDSHAKE_TIMEOUT, activate_preopened, parse_pipe_option
from .errors import HandshakeError, PipeOptionError, ScriptError
from .script import Interpreter, parse_script

EXIT_OK, EXIT_SCRIPT, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="extsh", description="Run a script that talks to external commands.")
    p.add_argument("-pipe", dest="pipe", metavar="R,W[,R,W...]", help="pre-opened descriptor pairs")
    p.add_argument("--read-timeout", type=float, metavar="SECONDS", help="deadline for each #fromexternal")
    p.add_argument(
        "--handshake-timeout", type=float, default=DEFAULT_HANDSHAKE_TIMEOUT, metavar="SECONDS"
    )
    p.add_argument("--echo", action="store_true", help="list text read by #fromexternal by default")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("script")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="extsh: %(levelname)s: %(message)s",
    )
    variables: dict[str, str] = {}
    registry = ChannelRegistry(read_timeout=args.read_timeout)
    try:
        if args.pipe is not None:
            try:
                spec = parse_pipe_option(args.pipe)
            except PipeOptionError as exc:
                print(f"extsh: {exc}", file=sys.stderr)
                return EXIT_USAGE
            try:
                activate_preopened(registry, spec, args.handshake_timeout, variables)
            except (HandshakeError, OSError) as exc:
                print(f"extsh: pre-opened channel handshake failed: {exc}", file=sys.stderr)
                return EXIT_SCRIPT
        try:
            with open(args.script, encoding="utf-8", errors="surrogateescape") as f:
                source = f.read()
        except OSError as exc:
            print(f"extsh: {exc}", file=sys.stderr)
            return EXIT_USAGE
        try:
            interp = Interpreter(registry, variables, sys.stdout, echo=args.echo)
            interp.run(parse_script(source))
        except ScriptError as exc:
            sys.stdout.flush()
            print(f"extsh: {args.script}: {exc}", file=sys.stderr)
            return EXIT_SCRIPT
        return EXIT_OK
    finally:
        registry.shutdown_all()


if __name__ == "__main__":
    sys.exit(main())
