import io
import json

from conftest import fixture_path
from mixtest.cli import EXIT_BUG, EXIT_ERROR, EXIT_OK, main

V8 = "clang-armv8-O3"
V7 = "clang-armv7a-O3-buggy"


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_check_fig1_buggy_and_fixed():
    code, text = run("check", fixture_path("SB"), "--profiles", V8, V7)
    assert code == EXIT_BUG
    assert text.startswith("Test SB: mixing-bug")
    code, text = run("check", fixture_path("SB"), "--profiles", V8, "clang-armv7a-O3-fixed")
    assert code == EXIT_OK
    assert "no-bug" in text


def test_check_structured():
    code, text = run("check", fixture_path("SB"), "--profiles", V8, V7, "--format", "structured")
    doc = json.loads(text)
    assert code == EXIT_BUG and doc["verdict"] == "mixing-bug"


def test_check_errors(tmp_path, capsys):
    assert run("check", fixture_path("SB"), "--profiles", str(tmp_path / "none.profile"))[0] == EXIT_ERROR
    assert run("check", fixture_path("SB"))[0] == EXIT_ERROR
    assert run("check", str(tmp_path / "missing.litmus"), "--profiles", V8)[0] == EXIT_ERROR
    assert run("check", fixture_path("SB"), "--profiles", V8, "--unroll", "0")[0] == EXIT_ERROR
    assert run("check", fixture_path("SB"), "--profiles", V8, "--target-model", "tso")[0] == EXIT_ERROR
    assert run("check", fixture_path("SB-mixed"), "--profiles", V8)[0] == EXIT_ERROR
    assert "expected a C source" in capsys.readouterr().err


def test_check_directory_skips_unsupported(tmp_path):
    assert run("gen", "--shapes", "SB", "--orders", "seq_cst", "--widths", "32", "128", "--out", str(tmp_path))[0] == 0
    code, text = run("check", str(tmp_path), "--profiles", V8, V7)
    assert code == EXIT_BUG
    assert "Test SB-32-sc-sc-sc-sc: mixing-bug" in text
    assert "Test SB-128-sc-sc-sc-sc: skipped, clang-armv8-O3 has no mapping for store w=128 mo=seq_cst (P0_0)" in text
    code, text = run("check", str(tmp_path), "--profiles", V8, V7, "--format", "structured")
    doc = json.loads(text)
    assert len(doc["reports"]) == 1 and len(doc["skipped"]) == 1


def test_jobs_byte_identical():
    a = run("check", fixture_path("SB"), "--profiles", V8, V7, "--jobs", "1")
    b = run("check", fixture_path("SB"), "--profiles", V8, V7, "--jobs", "8")
    assert a == b


def test_mix_writes_manifest(tmp_path):
    out = tmp_path / "mix"
    code, _ = run("mix", fixture_path("SB"), "--profiles", V8, V7, "--out", str(out))
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["assignments"] == 16
    assert sum(len(g["members"]) for g in manifest["groups"]) == 16
    for g in manifest["groups"]:
        assert (out / g["file"]).is_file()
        code, digest = run("hash", str(out / g["file"]))
        assert digest.strip() == g["digest"]


def test_mix_one_profile(tmp_path):
    code, _ = run("mix", fixture_path("SB"), "--profiles", V8, "--out", str(tmp_path))
    assert code == EXIT_OK
    assert len(list(tmp_path.glob("*.litmus"))) == 1


def test_mix_unsupported(tmp_path, capsys):
    code, _ = run("mix", fixture_path("SB-128"), "--profiles", V7, "--out", str(tmp_path))
    assert code == EXIT_ERROR
    err = capsys.readouterr().err
    assert "P0_0" in err and V7 in err


def test_mix_cap(tmp_path):
    code, _ = run("mix", fixture_path("SB"), "--profiles", V8, V7, "--max-assignments", "10", "--out", str(tmp_path))
    assert code == EXIT_ERROR


def test_simulate_source_and_asm():
    code, text = run("simulate", fixture_path("SB"))
    assert code == EXIT_OK
    assert "Test SB (rc11)" in text and "\nNo\n" in text and "is not satisfied" in text
    code, text = run("simulate", fixture_path("SB-mixed"))
    assert "\nOk\n" in text
    code, text = run("simulate", fixture_path("LB-glue"), "--project")
    assert "{P0:X0=1; P1:X0=1}" in text.splitlines()


def test_simulate_wrong_model():
    assert run("simulate", fixture_path("SB"), "--model", "arm")[0] == EXIT_ERROR


def test_gen(tmp_path):
    code, text = run("gen", "--shapes", "SB", "--orders", "seq_cst", "--widths", "32", "--out", str(tmp_path))
    assert code == EXIT_OK
    assert [p.name for p in tmp_path.iterdir()] == ["SB-32-sc-sc-sc-sc.litmus"]
    code, _ = run("gen", "--shapes", "SB,MP", "--orders", "seq_cst", "--widths", "32", "--out", str(tmp_path))
    assert len(list(tmp_path.iterdir())) == 2


def test_gen_empty_flag(tmp_path):
    assert run("gen", "--orders", "--out", str(tmp_path))[0] == EXIT_ERROR
    assert run("gen", "--shapes", "XX", "--out", str(tmp_path))[0] == EXIT_ERROR


def test_hash_is_stable():
    a = run("hash", fixture_path("SB-mixed"))
    assert a == run("hash", fixture_path("SB-mixed"))
    assert len(a[1].strip()) == 64
    assert run("hash", fixture_path("SB"))[0] == EXIT_ERROR


def test_import_profile_stub():
    assert run("import-profile")[0] == EXIT_ERROR


def test_usage():
    assert run()[0] == EXIT_ERROR
    assert run("--version")[0] == EXIT_OK
