"""``gateway``: run filters or the masking gateway on standard streams.

Output is flushed after every line so a dialog partner sees it at once.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .channels import ChannelRegistry
from .errors import ExtchanError
from .filters import FILTER_NAMES, Pipeline, filter_from_name
from .masking import MaskingGateway


def _lines(stream):
    for line in iter(stream.readline, ""):
        yield line[:-1] if line.endswith("\n") else line


def run_filters(filters, stdin, stdout) -> int:
    pipe = Pipeline(filters)
    for line in _lines(stdin):
        for out in pipe.feed(line):
            stdout.write(out + "\n")
        stdout.flush()
    for out in pipe.flush():
        stdout.write(out + "\n")
    stdout.flush()
    return 0


def channel_simplifier(registry: ChannelRegistry, channel_id: int):
    """Simplifier that sends one line to a channel and reads the framed reply."""

    def simplify(expr: str) -> str:
        registry.set_current(channel_id)
        registry.send((expr + "\n").encode("utf-8", "surrogateescape"))
        return registry.read_until_prompt().decode("utf-8", "surrogateescape")

    return simplify


def run_masking(gateway: MaskingGateway, stdin, stdout, out_prompt: str = "") -> int:
    for line in _lines(stdin):
        try:
            out = gateway.process(line)
        except ExtchanError as exc:
            out = [f"ERROR: {exc}"]
        for text in out:
            stdout.write(text + "\n")
        stdout.write(out_prompt + "\n")
        stdout.flush()
    return 0


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="gateway", description=__doc__.splitlines()[0])
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument(
        "--filter",
        action="append",
        metavar="NAME[:ARGS]",
        help=f"add a filter stage; one of {', '.join(FILTER_NAMES)}",
    )
    mode.add_argument("--mask", action="store_true", help="run the acc()/dd(#) masking gateway")
    p.add_argument("--simplifier-cmd", metavar="CMD", help="command simplifying acc() arguments")
    p.add_argument("--prompt", default="", help="prompt line printed by the simplifier")
    p.add_argument("--out-prompt", default="", help="prompt line printed after each reply")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="gateway: %(levelname)s: %(message)s")

    if args.filter:
        try:
            filters = [filter_from_name(n) for n in args.filter]
        except ValueError as exc:
            p.error(str(exc))
        return run_filters(filters, sys.stdin, sys.stdout)

    with ChannelRegistry() as registry:
        simplifier = None
        if args.simplifier_cmd:
            try:
                cid = registry.open_channel(args.simplifier_cmd)
            except ExtchanError as exc:
                print(f"gateway: {exc}", file=sys.stderr)
                return 1
            registry.set_prompt(args.prompt.encode())
            simplifier = channel_simplifier(registry, cid)
        return run_masking(MaskingGateway(simplifier=simplifier), sys.stdin, sys.stdout, args.out_prompt)


if __name__ == "__main__":
    sys.exit(main())
