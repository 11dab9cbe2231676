"""``extbench``: time the three ways of consulting an external program.

* ``system``   - fresh child per iteration, data exchanged through files;
* ``pipe``     - fresh child per iteration, input on the command line,
  output captured from its stdout;
* ``external`` - one long-lived child, one framed exchange per iteration.

The child is :mod:`extchan.mockcas`, whose ``--startup-delay`` models the
start-up cost of a real algebra system.
"""
from __future__ import annotations

import argparse
import json
import os
import shlex
import statistics
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field

from .channels import ChannelRegistry
from .errors import ChildFailure, ExtchanError
from .stream import split_framed

WITH_GCD = "(2*d^4+3*d^3-22*d^2-13*d+30)/(d^3-11*d+10)"
MODES = ("system", "pipe", "external")


@dataclass
class BenchResult:
    mode: str
    iterations: int
    total: float = 0.0
    times: list[float] = field(default_factory=list)
    answers: list[str] = field(default_factory=list)

    @property
    def total_ms(self) -> float:
        return self.total * 1000.0

    @property
    def min_ms(self) -> float | None:
        return min(self.times) * 1000.0 if self.times else None

    @property
    def median_ms(self) -> float | None:
        return statistics.median(self.times) * 1000.0 if self.times else None

    def report(self) -> dict:
        return {
            "mode": self.mode,
            "iterations": self.iterations,
            "total_ms": self.total_ms,
            "min_ms": self.min_ms,
            "median_ms": self.median_ms,
        }


def mockcas_command(startup_delay: float, prompt: str = "") -> str:
    cmd = [sys.executable, "-m", "extchan.mockcas", "--startup-delay", f"{startup_delay * 1000:g}"]
    if prompt:
        cmd += ["--prompt", prompt]
    return shlex.join(cmd)


def _answer(output: bytes, result: BenchResult) -> str:
    framed = split_framed(output, b"")
    if framed is None:
        raise ChildFailure(f"no framed answer in child output {output[:200]!r}", result)
    return framed[0].decode()


def _system_iteration(cmd, expression, workdir, result):
    finput = os.path.join(workdir, "finput")
    foutput = os.path.join(workdir, "foutput")
    with open(finput, "a") as f:
        f.write(expression + "\n")
    proc = subprocess.run(["/bin/sh", "-c", f"{cmd} < finput > foutput"], cwd=workdir)
    # finput must go, or the next append would stack a second expression
    os.remove(finput)
    if proc.returncode != 0:
        raise ChildFailure(f"child exited with status {proc.returncode}", result)
    with open(foutput, "rb") as f:
        return _answer(f.read(), result)


def _pipe_iteration(cmd, expression, result):
    proc = subprocess.run(
        ["/bin/sh", "-c", f"echo {shlex.quote(expression)} | {cmd}"], stdout=subprocess.PIPE
    )
    if proc.returncode != 0:
        raise ChildFailure(f"child exited with status {proc.returncode}", result)
    return _answer(proc.stdout, result)


def run_benchmark(
    mode: str, iterations: int = 200, startup_delay: float = 0.05, expression: str = WITH_GCD
) -> BenchResult:
    """Run *iterations* GCD contractions of *expression* in *mode*.

    *startup_delay* is in seconds. ``total`` includes setup (for external
    mode: starting the child once).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    result = BenchResult(mode, iterations)
    cmd = mockcas_command(startup_delay)
    start = time.monotonic()
    try:
        if mode == "external":
            with ChannelRegistry(shutdown_at_exit=False) as reg:
                reg.open_channel(cmd)
                payload = (expression + "\n").encode()
                for _ in range(iterations):
                    t0 = time.monotonic()
                    reg.send(payload)
                    result.answers.append(reg.read_until_prompt().decode())
                    result.times.append(time.monotonic() - t0)
        else:
            with tempfile.TemporaryDirectory(prefix="extbench-") as workdir:
                for _ in range(iterations):
                    t0 = time.monotonic()
                    if mode == "system":
                        answer = _system_iteration(cmd, expression, workdir, result)
                    else:
                        answer = _pipe_iteration(cmd, expression, result)
                    result.answers.append(answer)
                    result.times.append(time.monotonic() - t0)
    except ExtchanError as exc:
        result.total = time.monotonic() - start
        if isinstance(exc, ChildFailure):
            raise
        raise ChildFailure(str(exc), result) from exc
    result.total = time.monotonic() - start
    return result


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="extbench", description="Compare system/pipe/external interaction.")
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--startup-delay", type=float, default=50.0, metavar="MS")
    p.add_argument("--json", action="store_true", help="print a JSON report")
    args = p.parse_args(argv)
    if args.iterations < 0:
        p.error("--iterations must be non-negative")
    try:
        result = run_benchmark(args.mode, args.iterations, args.startup_delay / 1000.0)
    except ChildFailure as exc:
        print(f"extbench: {exc}", file=sys.stderr)
        if exc.partial is not None:
            print(json.dumps(exc.partial.report()), file=sys.stderr)
        return 1
    if args.json:
        print(json.dumps(result.report()))
    else:
        rep = result.report()
        print(f"{rep['mode']}: {rep['iterations']} iterations in {rep['total_ms']:.1f} ms", end="")
        if result.times:
            print(f" (min {rep['min_ms']:.2f} ms, median {rep['median_ms']:.2f} ms)", end="")
        print(f"; answer {result.answers[-1]!r}" if result.answers else "")
    return 0


if __name__ == "__main__":
    sys.exit(main())
