"""CLI subcommands, report text, and exit codes."""

import io
import pathlib

from jetvar.cli import cli_dispatch

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"


def run(*argv):
    out = io.StringIO()
    code = cli_dispatch(list(argv), out=out)
    return code, out.getvalue()


def test_el_free_particle():
    code, text = run("el", str(MODELS / "free_particle.jv"))
    assert code == 0
    assert "EL[u[1]] = -m * d(d(u[1];t);t)" in text


def test_divergence_with_witness():
    code, text = run(
        "divergence", str(MODELS / "free.jv"), "--expr", "d(u;t)*d(d(u;t);t)", "--witness"
    )
    assert code == 0
    assert "total divergence: yes" in text
    assert "witness[t] = 1/2 * d(u;t)^2" in text


def test_divergence_false_prints_el():
    code, text = run("divergence", str(MODELS / "free.jv"), "--expr", "u*d(d(u;t);t)")
    assert code == 1
    assert "total divergence: no" in text
    assert "EL[u]" in text


def test_noether_failure_prints_residual():
    code, text = run("noether", str(MODELS / "free.jv"), "--op", "d(EL(u);t)")
    assert code == 1
    assert "residual = -m * d(d(d(u;t);t);t)" in text


def test_noether_identity_maxwell():
    code, text = run("noether", str(MODELS / "maxwell.jv"), "--op", "d(EL(A[nu]);nu)")
    assert code == 0
    assert "noether identity: yes" in text


def test_master_commands():
    code, text = run("master", str(MODELS / "maxwell.jv"))
    assert code == 0
    assert "master equation holds in h(A)" in text
    code, _ = run("master", str(MODELS / "yang_mills_su2.jv"))
    assert code == 0


def test_symm_check():
    code, _ = run("symm", str(MODELS / "maxwell.jv"), "--q", "A[mu]=d(C;mu)")
    assert code == 0
    code, text = run("symm", str(MODELS / "free.jv"), "--q", "u=u")
    assert code == 1
    assert "pr X(L)" in text


def test_bracket_and_kt():
    code, text = run(
        "bracket", str(MODELS / "maxwell.jv"), "--f", "A*[0]*d(C;t)", "--g", "A*[0]*d(C;t)"
    )
    assert code == 0
    assert "(F,G) = 0" in text
    code, text = run("kt", str(MODELS / "maxwell.jv"), "--expr", "C*")
    assert code == 0
    assert "d_KT = -d(A*[0];t) - d(A*[1];x)" in text


def test_eval():
    code, text = run(
        "eval", str(MODELS / "free.jv"), "--section", "u=t^2", "--box", "t=0..1",
        "--param", "m=2",
    )
    assert code == 0
    assert "value = 4/3" in text


def test_parse_error_exit_code():
    code, text = run("divergence", str(MODELS / "free.jv"), "--expr", "d(u;t")
    assert code == 2
    assert "parse error" in text


def test_usage_error_exit_code():
    code, _ = run("divergence", str(MODELS / "free.jv"))
    assert code == 2


def test_domain_error_exit_code():
    # witness construction is restricted to one independent variable
    code, text = run(
        "divergence", str(MODELS / "maxwell.jv"), "--expr", "d(A[0];t)", "--witness"
    )
    assert code == 3
    assert "error" in text


def test_models_listing_and_emit():
    code, text = run("models")
    assert code == 0
    for name in ("free_particle", "scalar_phi4", "maxwell", "yang_mills_su2"):
        assert name in text
    code, text = run("models", "--emit", "maxwell", "--dim", "3")
    assert code == 0
    assert "vars t, x, y" in text


def test_latex_flag():
    code, text = run("el", str(MODELS / "free.jv"), "--latex")
    assert code == 0
    assert "-m\\,u_{tt}" in text


def test_determinism():
    first = run("el", str(MODELS / "yang_mills_su2.jv"))
    second = run("el", str(MODELS / "yang_mills_su2.jv"))
    assert first == second
