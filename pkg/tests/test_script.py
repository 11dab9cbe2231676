import io
import subprocess

import pytest

from conftest import DATA, PY
from extchan.channels import ChannelRegistry
from extchan.errors import ScriptError, ScriptSyntaxError
from extchan.script import (
    Comment,
    Data,
    Do,
    EndDo,
    External,
    FromExternal,
    Interpreter,
    ToExternal,
    execute,
    expand_escapes,
    parse_script,
)

EXTSH = [PY, "-m", "extchan.cli"]


def run(source, registry=None, **kw):
    out = io.StringIO()
    reg = registry or ChannelRegistry(read_timeout=10.0, shutdown_at_exit=False)
    interp = Interpreter(reg, output=out, **kw)
    try:
        interp.run_source(source)
    finally:
        if registry is None:
            reg.shutdown_all()
    return interp, out.getvalue()


# -- parsing -----------------------------------------------------------------


def test_parse_examples():
    (ins,) = parse_script('#external "n1" cat -u')
    assert ins == External("n1", "cat -u", lineno=1)
    (ins,) = parse_script('#toexternal "(a+b)^2\\n\\n"')
    assert isinstance(ins, ToExternal)
    assert expand_escapes(ins.fmt) == "(a+b)^2\n\n"
    (ins,) = parse_script('#fromexternal "tmp" 1')
    assert ins == FromExternal(None, "tmp", "1", lineno=1)


def test_parse_fromexternal_flags():
    plus, minus = parse_script("#fromexternal+\n#fromexternal- \"v\", `m'")
    assert plus.echo == "+" and plus.var is None
    assert (minus.echo, minus.var, minus.maxlength) == ("-", "v", "`m'")


def test_parse_keeps_line_numbers_and_kinds():
    prog = parse_script("* comment\n  Local x = 1;\n#do i = 1, 3\n#enddo\n")
    assert [type(i) for i in prog] == [Comment, Data, Do, EndDo]
    assert [i.lineno for i in prog] == [1, 2, 3, 4]
    assert prog[2].end == 3


@pytest.mark.parametrize(
    "source, line",
    [
        ("#bogus x", 1),
        ("\n#toexternal (a+b)", 2),
        ('#toexternal "unterminated', 1),
        ("#do i = 1\n#enddo", 1),
        ("#do i = 1, 2", 1),
        ("#enddo", 1),
        ('#fromexternal "1bad"', 1),
        ('#fromexternal "v" x', 1),
        ("#external", 1),
        ("#setexternal", 1),
        ("#prompt+ x", 1),
        ("#write finput \"x\"", 1),
    ],
)
def test_syntax_errors_name_line(source, line):
    with pytest.raises(ScriptSyntaxError) as ei:
        parse_script(source)
    assert ei.value.lineno == line
    assert str(ei.value).startswith(f"line {line}: ")


def test_escapes():
    assert expand_escapes(r"a\tb\\c\"d\n\q") == 'a\tb\\c"d\n\\q'


# -- execution ---------------------------------------------------------------


def test_two_cat_example():
    interp, out = run((DATA / "two_cat.ext").read_text())
    assert interp.expressions == {"aPLUSbTO2": "(a+b)^2", "aPLUSbTO3": "(a+b)^3"}
    assert interp.registry.running_ids() == []
    assert "aPLUSbTO3 =\n      (a+b)^3;" in out


def test_do_loop_runs_1000_times():
    interp, out = run('#do i = 1,1000\n#echo "`i\'"\n#enddo\n')
    assert out.splitlines() == [str(i) for i in range(1, 1001)]
    assert interp.variables["i"] == "1000"


def test_nested_loops_and_variable_bounds():
    _, out = run('#define n "3"\n#do i = 1, `n\'\n#do j = `i\', `n\'\n#echo "`i\'`j\'"\n#enddo\n#enddo')
    assert out.split() == ["11", "12", "13", "22", "23", "33"]


def test_empty_loop():
    _, out = run('#do i = 2, 1\n#echo "x"\n#enddo\n#echo "done"')
    assert out == "done\n"


def test_rmexternal_zero_without_channels():
    run("#rmexternal 0")


def test_undefined_variable_is_error():
    with pytest.raises(ScriptError) as ei:
        run('#echo "ok"\n#echo "`nope\'"')
    assert ei.value.lineno == 2


def test_external_binds_descriptor():
    interp, _ = run('#external "n1" cat -u\n#external "$n2" cat -u\n#setexternal `n1\'\n#rmexternal 0')
    assert interp.variables["n1"] == "1" and interp.variables["$n2"] == "2"


def test_fromexternal_maxlength_then_next_read():
    src = (
        "#external cat -u\n"
        '#toexternal "abcdef\\n\\nsecond\\n\\n"\n'
        '#define m "3"\n'
        "#fromexternal \"a\" `m'\n"
        '#fromexternal "b" 100\n'
    )
    interp, _ = run(src)
    assert interp.variables["a"] == "abc"
    assert interp.variables["b"] == "second"


def test_fromexternal_preserves_newlines():
    interp, _ = run('#external cat -u\n#toexternal "x\\ny\\n\\n"\n#fromexternal "v"')
    assert interp.variables["v"] == "x\ny"


def test_fromexternal_echo_flags():
    src = '#external cat -u\n#toexternal "hi\\n\\nho\\n\\n"\n#fromexternal+ "a"\n#fromexternal- "b"'
    _, out = run(src)
    assert out == "hi\n"
    _, out = run(src.replace("#fromexternal+", "#fromexternal"), echo=True)
    assert out == "hi\n"


def test_spliced_instructions_run():
    src = '#external cat -u\n#toexternal "#define x \\"42\\"\\n#echo \\"spliced\\"\\n\\n"\n#fromexternal\n#echo "after `x\'"'
    interp, out = run(src)
    assert out == "spliced\nafter 42\n"


def test_toexternal_sends_no_extra_newline():
    interp, _ = run('#external cat -u\n#toexternal "a"\n#toexternal "b\\n\\n"\n#fromexternal "v"')
    assert interp.variables["v"] == "ab"


def test_setexternalattr_and_prompt():
    src = (
        "#setexternalattr kill=15,killall=false,daemon=false\n"
        '#external "c" cat -u\n'
        "#prompt READY\n"
        '#toexternal "x\\nREADY\\n"\n'
        '#fromexternal "v"\n'
    )
    interp, _ = run(src)
    assert interp.variables["v"] == "x"
    ch = interp.registry.channels[1]
    assert ch.attrs.kill_signal == 15 and not ch.attrs.daemon


def test_system_waits_and_write_remove(tmp_path):
    f = tmp_path / "f"
    src = f'#write <{f}> "one"\n#write <{f}> "two\\tx"\n#system cat {f} > {f}.copy\n#remove <{f}>\n#remove <{f}>'
    run(src)
    assert not f.exists()
    assert (tmp_path / "f.copy").read_text() == "one\ntwo\tx\n"


def test_pipe_splices_output():
    _, out = run("#pipe printf '#echo \"spliced\"\\n'")
    assert out == "spliced\n"


def test_system_exit_status_ignored():
    _, out = run('#system exit 3\n#echo "still here"')
    assert out == "still here\n"


def test_end_stops_execution():
    _, out = run('#echo "a"\n.end\n#echo "b"')
    assert out == "a\n"


def test_channel_error_names_line():
    with pytest.raises(ScriptError) as ei:
        run("* c\n#setexternal 5")
    assert ei.value.lineno == 2


def test_execute_status():
    reg = ChannelRegistry(shutdown_at_exit=False)
    out, diag = io.StringIO(), io.StringIO()
    assert execute(parse_script('#echo "x"'), reg, {}, out) == 0
    assert execute(parse_script("#setexternal 9"), reg, {}, out, diagnostics=diag) == 1
    assert "line 1" in diag.getvalue()


@pytest.mark.parametrize("mode", ["system", "pipe"])
def test_splice_equivalence(tmp_path, mode):
    outs = {}
    for m in (mode, "external"):
        proc = subprocess.run(
            EXTSH + [str(DATA / f"bench_{m}.ext")], cwd=tmp_path, capture_output=True, timeout=60
        )
        assert proc.returncode == 0, proc.stderr
        outs[m] = proc.stdout
    assert outs[mode] == outs["external"]
    assert outs[mode].count(b"noGCD =\n      3+2*d;") == 3


def test_determinism(tmp_path):
    results = {
        subprocess.run(EXTSH + [str(DATA / "two_cat.ext")], capture_output=True, timeout=60).stdout
        for _ in range(3)
    }
    assert len(results) == 1


# -- CLI ---------------------------------------------------------------------


def test_cli_exit_codes(tmp_path):
    ok = tmp_path / "ok.ext"
    ok.write_text('#echo "hello"\n')
    bad = tmp_path / "bad.ext"
    bad.write_text('#echo "a"\n#setexternal 3\n')
    syntax = tmp_path / "syntax.ext"
    syntax.write_text("#nonsense\n")

    p = subprocess.run(EXTSH + [str(ok)], capture_output=True, timeout=60)
    assert (p.returncode, p.stdout) == (0, b"hello\n")
    p = subprocess.run(EXTSH + [str(bad)], capture_output=True, timeout=60)
    assert p.returncode == 1 and p.stdout == b"a\n" and b"line 2" in p.stderr
    p = subprocess.run(EXTSH + [str(syntax)], capture_output=True, timeout=60)
    assert p.returncode == 1 and b"line 1" in p.stderr
    for argv in ([str(tmp_path / "missing.ext")], [], ["-pipe", "1,2", str(ok)], ["-pipe", "x", str(ok)]):
        p = subprocess.run(EXTSH + argv, capture_output=True, timeout=60)
        assert p.returncode == 2, argv


def test_cli_read_timeout(tmp_path):
    s = tmp_path / "s.ext"
    s.write_text("#external cat -u\n#toexternal \"no prompt\\n\"\n#fromexternal\n")
    p = subprocess.run(EXTSH + ["--read-timeout", "0.2", str(s)], capture_output=True, timeout=60)
    assert p.returncode == 1 and b"line 3" in p.stderr
