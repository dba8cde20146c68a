import json

import pytest

from chiral_potts.cli import main, sector_id
from chiral_potts.sectors import enumerate_sectors
from chiral_potts.tau2 import Tau2Spec
from chiral_potts.verify import RunConfig, parse_config

CANON_ID = "8d2c7759a5f6f1c5"


def canonical():
    return next(s for s in enumerate_sectors(Tau2Spec(3, 3, 0, 0), 0) if s.mE == 2)


def test_parse_config():
    text = """
    # grid
    N = 3
    L = 2, 3
    m = all
    r = 0
    kprime = 0.2, 0.6
    suite = tau2, duality
    tol.tau2.dolan_grady = 1e-7
    """
    d = parse_config(text)
    assert d["L"] == (2, 3) and d["m"] is None and d["r"] == (0,)
    assert d["kprimes"] == (0.2, 0.6)
    assert d["suites"] == ("tau2", "duality")
    assert d["tolerances"] == {"tau2.dolan_grady": 1e-7}
    cfg = RunConfig(**d)
    assert [s.L for s in cfg.specs()] == [2, 2, 2, 3, 3, 3]


@pytest.mark.parametrize("text", ["bogus = 1", "N = 4", "kprime = 1", "suite = nope", "L = 9", "N = all"])
def test_parse_config_errors(text):
    with pytest.raises(ValueError):
        RunConfig(**parse_config(text))


def test_sector_id_is_stable():
    s = canonical()
    assert sector_id(s) == CANON_ID
    assert sector_id(canonical()) == sector_id(s)
    ids = {sector_id(x) for Q in range(3) for x in enumerate_sectors(Tau2Spec(3, 3, 0, 0), Q)}
    assert len(ids) == sum(len(enumerate_sectors(Tau2Spec(3, 3, 0, 0), Q)) for Q in range(3))


def test_spectrum_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["spectrum", "--L", "2", "--m", "1", "--out", str(a)]) == 0
    assert main(["spectrum", "--L", "2", "--m", "1", "--out", str(b)]) == 0
    for name in ("sectors.json", "sectors.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    doc = json.loads((a / "sectors.json").read_text())
    assert doc["completeness_pass"] is True
    # 9 tables (r, Q), each summing to N^(L-1) = 3
    txt = (a / "sectors.txt").read_text()
    assert txt.count("sum") == 9


def test_spectrum_canonical_row(tmp_path):
    assert main(["spectrum", "--L", "3", "--m", "0", "--r", "0", "--Q", "0", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "sectors.json").read_text())
    ids = {s["sector_id"] for s in doc["sectors"]}
    assert CANON_ID in ids
    assert CANON_ID in (tmp_path / "sectors.txt").read_text()


def test_eigvecs_canonical(tmp_path):
    args = ["eigvecs", "--L", "3", "--m", "0", "--r", "0", "--Q", "0", "--sector", CANON_ID,
            "--kprime", "0.2", "--kprime", "5", "--kprime", "-0.6", "--out", str(tmp_path)]
    assert main(args) == 0
    rep = json.loads((tmp_path / f"eigvecs_{CANON_ID}.json").read_text())
    assert rep["pass"] and len(rep["u_basis"]) == 4
    assert rep["u_basis_certificate"]["gram"] <= 1e-8
    for e in rep["families"].values():
        assert e["w_min_overlap_direct"] >= 1 - 1e-6 and e["v_min_overlap_direct"] >= 1 - 1e-6
    assert len(rep["duality"]) == 1
    d = rep["duality"][0]
    assert (d["kprime"], d["dual_kprime"]) == (0.2, 5.0)
    assert d["modulus_dev"] <= 1e-6 and d["sign_dev"] <= 1e-6


def test_eigvecs_single_vector_sector(tmp_path):
    spec = Tau2Spec(3, 2, 0, 0)
    s = next(x for Q in range(3) for x in enumerate_sectors(spec, Q) if x.mE == 0)
    sid = sector_id(s)
    assert main(["eigvecs", "--L", "2", "--m", "0", "--r", "0", "--sector", sid, "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / f"eigvecs_{sid}.json").read_text())
    assert list(rep["u_basis"]) == [""]


def test_eigvecs_unknown_sector(tmp_path):
    assert main(["eigvecs", "--L", "2", "--sector", "ffffffffffff", "--out", str(tmp_path)]) == 2


def test_verify_report(tmp_path):
    assert main(["verify", "--L", "2", "--suite", "tau2", "--suite", "duality", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["pass"] is True
    names = {e["identity_name"] for e in doc["suites"]["tau2"]}
    assert {"tau2.dolan_grady", "tau2.commuting_family"} <= names
    assert "duality.cpm_transfer" in {e["identity_name"] for e in doc["suites"]["duality"]}
    for e in doc["suites"]["tau2"]:
        assert {"identity_name", "max_residual", "tolerance", "pass"} <= set(e)


def test_verify_tolerance_override_fails(tmp_path):
    cfg = tmp_path / "run.cfg"
    # measured Dolan-Grady residual is around 1e-13
    cfg.write_text("L = 2\nsuite = tau2\ntol.tau2.dolan_grady = 1e-20\n")
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    doc = json.loads((tmp_path / "o" / "verify.json").read_text())
    bad = [e for e in doc["suites"]["tau2"] if not e["pass"]]
    assert [e["identity_name"] for e in bad] == ["tau2.dolan_grady"]


def test_bad_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("N = 4\n")
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.cfg")]) == 2
