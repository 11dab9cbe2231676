import logging
import subprocess
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import DATA, PY
from extchan.filters import (
    BlankLineDrop,
    DoubleStarToCaret,
    LineJoinUntilMarker,
    NegPowerParenthesize,
    Pipeline,
    PowerToDoubleStar,
    PromptInject,
    compose,
    filter_from_name,
    run_filter,
)
from extchan.stream import Duplex


def test_prompt_inject():
    assert run_filter(PromptInject("$", "P"), "3 / 2$") == ["3 / 2", "P"]
    assert run_filter(PromptInject("$", "P"), "a$b$") == ["a", "P", "b", "P"]
    assert run_filter(PromptInject("$", "P"), "a$b") == ["a", "P", "b"]
    assert run_filter(PromptInject("$", "P"), "plain") == ["plain"]
    assert run_filter(PromptInject("$", "P"), "") == [""]
    assert run_filter(PromptInject("#", "READY"), "x#") == ["x", "READY"]


def test_blank_line_drop():
    f = BlankLineDrop()
    assert run_filter(f, "") == []
    assert run_filter(f, " ") == [" "]
    assert run_filter(f, "x") == ["x"]


def test_neg_power():
    f = NegPowerParenthesize()
    assert run_filter(f, "a^-1") == ["a^(-1)"]
    assert run_filter(f, "a^-12+b^-3") == ["a^(-12)+b^(-3)"]
    assert run_filter(f, "a^(-1)") == ["a^(-1)"]


def test_neg_power_symbolic_left_alone(caplog):
    with caplog.at_level(logging.WARNING):
        assert run_filter(NegPowerParenthesize(), "a^-n") == ["a^-n"]
    assert "a^-n" in caplog.text


def test_neg_power_then_double_star():
    assert list(compose([NegPowerParenthesize(), PowerToDoubleStar()], ["a^-1"])) == ["a**(-1)"]
    assert list(compose([NegPowerParenthesize(), PowerToDoubleStar()], ["d^-2*x"])) == ["d**(-2)*x"]


def test_double_star_to_caret():
    assert list(compose([DoubleStarToCaret()], ["x**3"])) == ["x^3"]


def test_empty_composition_is_identity():
    lines = ["a", "", "b^2$"]
    assert list(compose([], lines)) == lines


def test_line_join_until_marker():
    f = LineJoinUntilMarker("$", "P")
    assert f.feed("1 +") == []
    assert f.feed("2$") == ["1 +2", "P"]
    assert f.feed("a$b$c") == ["a", "P", "b", "P"]
    assert f.flush() == ["c"]
    assert f.flush() == []


def test_marker_must_be_single_character():
    with pytest.raises(ValueError):
        PromptInject("$$", "P")
    with pytest.raises(ValueError):
        LineJoinUntilMarker("", "P")


def test_pipeline_flushes_held_text_through_later_stages():
    pipe = Pipeline([LineJoinUntilMarker(), PowerToDoubleStar()])
    assert pipe.feed("x^2") == []
    assert pipe.flush() == ["x**2"]


def _golden_filters():
    return [NegPowerParenthesize(), PowerToDoubleStar(), DoubleStarToCaret(), PromptInject(), BlankLineDrop()]


def test_composition_golden_and_associative():
    lines = (DATA / "filters_in.txt").read_text().splitlines()
    expected = (DATA / "filters_expected.txt").read_text().splitlines()
    f, g, h, i, j = _golden_filters()
    assert list(compose([f, g, h, i, j], lines)) == expected
    f, g, h, i, j = _golden_filters()
    assert list(compose([f, Pipeline([g, Pipeline([h, i]), j])], lines)) == expected
    f, g, h, i, j = _golden_filters()
    assert list(compose([Pipeline([f, g]), Pipeline([h, i, j])], lines)) == expected


def test_compose_is_lazy():
    pulled = []

    def source():
        for line in ["a$", "b$"]:
            pulled.append(line)
            yield line

    out = compose([PromptInject()], source())
    assert next(out) == "a" and pulled == ["a$"]
    assert next(out) == "P" and pulled == ["a$"]
    assert next(out) == "b" and pulled == ["a$", "b$"]


@given(st.text(alphabet="ab^*-( )0123", max_size=30).filter(lambda s: "*" not in s))
def test_caret_round_trip(text):
    assert DoubleStarToCaret().feed(PowerToDoubleStar().feed(text)[0]) == [text]


@given(st.text(alphabet="ab^*-( )0123", max_size=30).filter(lambda s: "^" not in s))
def test_double_star_round_trip(text):
    assert PowerToDoubleStar().feed(DoubleStarToCaret().feed(text)[0]) == [text]


def test_filter_from_name():
    assert isinstance(filter_from_name("drop-blank"), BlankLineDrop)
    f = filter_from_name("prompt-inject:#,READY")
    assert (f.marker, f.prompt) == ("#", "READY")
    with pytest.raises(ValueError):
        filter_from_name("nope")
    with pytest.raises(ValueError):
        filter_from_name("drop-blank:x")


def test_gateway_cli_streams_line_by_line():
    proc = subprocess.Popen(
        [PY, "-m", "extchan.gateway", "--filter", "neg-power", "--filter", "caret-to-star",
         "--filter", "prompt-inject", "--filter", "drop-blank"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        bufsize=0,
    )
    stream = Duplex(proc.stdout.fileno(), proc.stdin.fileno())
    try:
        for i in range(5):
            stream.write(f"a^-{i}$\n".encode())
            # the reply must arrive while the producer is still holding the next line
            assert stream.readline(timeout=10) == f"a**(-{i})\n".encode()
            assert stream.readline(timeout=10) == b"P\n"
            time.sleep(0.02)
        stream.write(b"\n")
        stream.write(b"x^2\n")
        assert stream.readline(timeout=10) == b"x**2\n"
    finally:
        proc.stdin.close()
        assert proc.wait(10) == 0
        proc.stdout.close()


def test_gateway_cli_rejects_unknown_filter():
    p = subprocess.run([PY, "-m", "extchan.gateway", "--filter", "bogus"], capture_output=True, timeout=30)
    assert p.returncode == 2
