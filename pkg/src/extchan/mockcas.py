"""``mockcas``: a prompt-speaking stand-in for an external algebra system.

Reads one expression per line on stdin, answers with the GCD-contracted
ratio followed by a prompt line. Malformed input yields ``ERROR: <msg>``
followed by the prompt, so framing is never lost. Blank lines are ignored.
"""
from __future__ import annotations

import argparse
import sys
import time

from .errors import ExprSyntaxError
from .poly import format_ratio, gcd_contract, parse_poly_expr


def simplify(text: str, descending: bool = False) -> str:
    return format_ratio(gcd_contract(parse_poly_expr(text)), descending)


def serve(stdin, stdout, prompt: str = "", startup_delay: float = 0.0, descending: bool = False) -> int:
    if startup_delay > 0:
        time.sleep(startup_delay)
    for line in iter(stdin.readline, ""):
        if not line.strip():
            continue
        try:
            answer = simplify(line, descending)
        except (ExprSyntaxError, ZeroDivisionError) as exc:
            answer = f"ERROR: {exc}"
        stdout.write(f"{answer}\n{prompt}\n")
        stdout.flush()
    return 0


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="mockcas", description=__doc__.splitlines()[0])
    p.add_argument("--prompt", default="", help="prompt line printed after each answer")
    p.add_argument("--startup-delay", type=float, default=0.0, metavar="MS")
    p.add_argument(
        "--order",
        choices=("ascending", "descending"),
        default="ascending",
        help="term order of printed polynomials",
    )
    args = p.parse_args(argv)
    return serve(
        sys.stdin, sys.stdout, args.prompt, args.startup_delay / 1000.0, args.order == "descending"
    )


if __name__ == "__main__":
    sys.exit(main())
