import os

import pytest

from extchan.errors import EndOfStreamBeforePrompt, ReadTimeout
from extchan.stream import Duplex, is_prompt_line, split_framed


@pytest.fixture
def loop():
    """A Duplex whose writes come back on its read side."""
    r, w = os.pipe()
    d = Duplex(r, w)
    yield d
    d.close()


def test_prompt_line_rules():
    assert is_prompt_line(b"\n", b"")
    assert is_prompt_line(b"\r\n", b"")
    assert is_prompt_line(b"READY\n", b"READY")
    assert is_prompt_line(b"READY\r\n", b"READY")
    assert not is_prompt_line(b"READY", b"READY")
    assert not is_prompt_line(b"xREADY\n", b"READY")
    assert not is_prompt_line(b"READY \n", b"READY")


def test_reply_and_prompt(loop):
    loop.write(b"(a+b)^3\nREADY\n")
    assert loop.read_until_prompt(b"READY") == b"(a+b)^3"


def test_multiline_reply_keeps_inner_newlines(loop):
    loop.write(b"a\nb\n\n")
    assert loop.read_until_prompt(b"") == b"a\nb"


def test_mid_line_prompt_is_not_a_boundary(loop):
    loop.write(b"xx READY yy\nREADY\n")
    assert loop.read_until_prompt(b"READY") == b"xx READY yy"


def test_maxlength_consumes_through_prompt(loop):
    loop.write(b"(a+b)^2\n\nsecond\n\n")
    assert loop.read_until_prompt(b"", maxlength=1) == b"("
    assert loop.read_until_prompt(b"") == b"second"


def test_end_of_stream_keeps_partial():
    r, w = os.pipe()
    os.write(w, b"partial\nrest")
    os.close(w)
    d = Duplex(r, os.dup(1))
    with pytest.raises(EndOfStreamBeforePrompt) as ei:
        d.read_until_prompt(b"")
    assert ei.value.partial == b"partial\nrest"
    d.close()


def test_empty_reply_differs_from_eof(loop):
    loop.write(b"\n")
    assert loop.read_until_prompt(b"") == b""


def test_timeout(loop):
    loop.write(b"no prompt yet\n")
    with pytest.raises(ReadTimeout) as ei:
        loop.read_until_prompt(b"", timeout=0.05)
    assert ei.value.partial == b"no prompt yet\n"


def test_readline_limit(loop):
    loop.write(b"x" * 300 + b"\n")
    assert loop.readline(limit=128) == b"x" * 128


def test_split_framed():
    assert split_framed(b"3+2*d\n\nrest", b"") == (b"3+2*d", b"rest")
    assert split_framed(b"3+2*d\n", b"") is None
