"""Command line driver: sector tables, eigenvector reports and verification suites."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from .sectors import SectorError, enumerate_sectors
from .verify import SUITES, RunConfig, parse_config, run_suites

DIGITS = 12


def sector_id(sector) -> str:
    """Content hash of (N, L, m, r, Q, F coefficients to 1e-9, Pa, Pb)."""
    coeffs = []
    for c in sector.F.coeffs:
        re, im = (round(float(x), 9) + 0.0 for x in (np.real(c), np.imag(c)))
        coeffs.append([re, im])
    key = [sector.N, sector.L, sector.spec.m, sector.r, sector.Q, coeffs, sector.Pa, sector.Pb]
    text = json.dumps(key, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _cvec(v: np.ndarray) -> list:
    """Unit vector with its largest entry real positive, as [re, im] pairs."""
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v) > np.abs(v).max() * (1 - 1e-9)))
    v = v * (abs(v[k]) / v[k])
    return [[round(float(z.real), DIGITS) + 0.0, round(float(z.imag), DIGITS) + 0.0] for z in v]


def _num(x: float) -> float:
    return float(f"{float(x):.{DIGITS}g}")


def _dump(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def build_config(args) -> RunConfig:
    kw = {}
    if args.config:
        kw = parse_config(Path(args.config).read_text())
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.out is not None:
        kw["out"] = args.out
    if args.suite:
        kw["suites"] = tuple(args.suite)
    if args.kprime:
        kw["kprimes"] = tuple(args.kprime)
    for key in ("N", "L"):
        val = getattr(args, key)
        if val is not None:
            kw[key] = (val,)
    for key in ("m", "r", "Q"):
        val = getattr(args, key)
        if val is not None:
            kw[key] = None if val == "all" else (int(val),)
    if getattr(args, "jobs", None):
        kw["jobs"] = args.jobs
    return RunConfig(**kw)


# ---------------------------------------------------------------- spectrum


def _table(spec, Q, sectors) -> str:
    head = f"N={spec.N} L={spec.L} m={spec.m} r={spec.r} Q={Q}"
    rows = [head, f"{'id':16}  {'types':14} {'J':>2} {'Pa':>3} {'Pb':>3} {'Pmu':>4} {'mE':>3}  theta"]
    for s in sectors:
        th = " ".join(f"{x:.6f}" for x in s.theta)
        rows.append(f"{sector_id(s):16}  {','.join(s.types):14} {s.J:>2} {s.Pa:>3} {s.Pb:>3} {s.Pmu:>4} {s.mE:>3}  {th}")
    total = sum(s.degeneracy for s in sectors)
    rows.append(f"sum 2^mE = {total} (expected {spec.N ** (spec.L - 1)})")
    return "\n".join(rows)


def cmd_spectrum(cfg: RunConfig) -> int:
    records, tables, failures = [], [], []
    for spec in cfg.specs():
        for Q in cfg.charges(spec):
            where = f"N={spec.N} L={spec.L} m={spec.m} r={spec.r} Q={Q}"
            try:
                secs = enumerate_sectors(spec, Q, cfg.seed)
            except SectorError as err:
                failures.append(f"sectors.enumeration at {where}: {err}")
                continue
            total = sum(s.degeneracy for s in secs)
            if total != spec.N ** (spec.L - 1):
                failures.append(f"sectors.completeness at {where}: {total} != {spec.N ** (spec.L - 1)}")
            for s in secs:
                rec = s.to_json()
                rec["F_coeffs"] = [[_num(x) for x in c] for c in rec["F_coeffs"]]
                rec["eigpoly_coeffs"] = [[_num(x) for x in c] for c in rec["eigpoly_coeffs"]]
                rec["theta"] = [_num(x) for x in rec["theta"]]
                rec["a"] = [_num(x) for x in rec["a"]]
                rec["sector_id"] = sector_id(s)
                records.append(rec)
            tables.append(_table(spec, Q, secs))
    out = Path(cfg.out)
    _dump(out / "sectors.json", {"config": cfg.to_json(), "sectors": records,
                                 "completeness_pass": not failures, "failures": failures})
    text = "\n\n".join(tables) + "\n"
    (out / "sectors.txt").write_text(text)
    print(text, end="")
    for f in failures:
        print(f"FAILED {f}", file=sys.stderr)
    return 1 if failures else 0


# ----------------------------------------------------------------- eigvecs


def _find_by_id(cfg: RunConfig, sid: str):
    for spec in cfg.specs():
        for Q in cfg.charges(spec):
            for s in enumerate_sectors(spec, Q, cfg.seed):
                if sector_id(s).startswith(sid):
                    return s
    return None


def eigvecs_report(sector, kprimes) -> tuple:
    """(report, failures) for the u basis and the w/v families at each k'."""
    from . import xxz
    from .onsager import (V_ZERO, W_INF, VectorError, compare_with_direct, duality_vectors, limit_basis,
                          overlap, sign_label, synthesize_all)

    failures = []
    rep = {"sector_id": sector_id(sector), "sector": sector.to_json(), "families": {}}
    if sector.mE == 0:
        rep["u_basis"] = {"": _cvec(sector.frame_full[:, 0])}
    else:
        sign = 1 if any(t.endswith("+") for t in sector.types) else -1
        fam = xxz.generate_u_basis(sector, sign)
        cert = xxz.u_basis_certificate(sector, fam)
        rep["u_basis"] = {sign_label(s): _cvec(v) for s, v in sorted(fam.vectors.items())}
        rep["u_basis_certificate"] = {k: _num(v) for k, v in cert.items()}
        if cert["min_overlap"] < 1 - 1e-6:
            failures.append(f"u basis overlap with the limit basis {cert['min_overlap']:.3e}")
        kind = W_INF if fam.kind == W_INF else V_ZERO
        lim = limit_basis(sector, kind)
        rep["u_basis_vs_limit_basis"] = _num(min(overlap(fam.vectors[s], lim.vectors[s]) for s in fam.vectors))
    for kp in kprimes:
        entry = {}
        for kind, tag in ((W_INF, "w"), (V_ZERO, "v")):
            fam = limit_basis(sector, kind)
            vecs = synthesize_all(sector, fam, kp)
            try:
                ov = compare_with_direct(sector, fam, kp)
            except VectorError as err:
                ov = None
                entry[f"{tag}_note"] = str(err)
            entry[tag] = {sign_label(s): _cvec(v) for s, v in sorted(vecs.items())}
            entry[f"{tag}_min_overlap_direct"] = None if ov is None else _num(ov)
            if ov is not None and ov < 1 - 1e-6:
                failures.append(f"{tag}(s; {kp}) overlap with direct eigenvectors {ov:.3e}")
        rep["families"][repr(float(kp))] = entry
    pairs = [(a, b) for i, a in enumerate(kprimes) for b in kprimes[i + 1:] if abs(a * b - 1) < 1e-12]
    rep["duality"] = []
    for a, b in pairs:
        if sector.mE == 0:
            continue
        dv = duality_vectors(sector, a)
        rep["duality"].append({"kprime": _num(a), "dual_kprime": _num(b), "dual_sector_id": sector_id(dv["dual"]),
                               "modulus_dev": _num(dv["modulus_dev"]), "sign_dev": _num(dv["sign_dev"])})
        if max(dv["modulus_dev"], dv["sign_dev"]) > 1e-6:
            failures.append(f"duality correspondence at k' = {a}")
    return rep, failures


def cmd_eigvecs(cfg: RunConfig, sid: str) -> int:
    sector = _find_by_id(cfg, sid)
    if sector is None:
        print(f"no sector with id {sid!r} in the configured grid", file=sys.stderr)
        return 2
    rep, failures = eigvecs_report(sector, list(cfg.kprimes))
    rep["failures"] = failures
    rep["pass"] = not failures
    _dump(Path(cfg.out) / f"eigvecs_{sector_id(sector)}.json", rep)
    print(f"sector {sector_id(sector)} types={','.join(sector.types)} mE={sector.mE}")
    if "u_basis_certificate" in rep:
        print(f"  u basis: {len(rep['u_basis'])} vectors, min overlap {rep['u_basis_certificate']['min_overlap']:.12f}")
    for kp, e in rep["families"].items():
        print(f"  k'={kp}: w overlap {e['w_min_overlap_direct']}, v overlap {e['v_min_overlap_direct']}")
    for d in rep["duality"]:
        print(f"  duality k'={d['kprime']} <-> {d['dual_kprime']}: |c|-1 {d['modulus_dev']:.1e}, sign {d['sign_dev']:.1e}")
    for f in failures:
        print(f"FAILED {f}", file=sys.stderr)
    return 1 if failures else 0


# ------------------------------------------------------------------ verify


def cmd_verify(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    res = run_suites(cfg)
    reports = res["reports"]
    doc = {"config": cfg.to_json(), "suites": {}, "pass": True}
    for name in cfg.suites:
        entries = reports[name].to_json()
        for e in entries:
            if isinstance(e["max_residual"], float):
                e["max_residual"] = _num(e["max_residual"])
        doc["suites"][name] = entries
        doc["pass"] = doc["pass"] and reports[name].passed
    _dump(Path(cfg.out) / "verify.json", doc)
    for name in cfg.suites:
        for e in doc["suites"][name]:
            flag = "PASS" if e["pass"] else "FAIL"
            res_txt = e["max_residual"] if isinstance(e["max_residual"], str) else f"{e['max_residual']:.2e}"
            print(f"{flag} {e['identity_name']:44s} {res_txt:>9} <= {e['tolerance']:.0e}")
    failed = [e for n in cfg.suites for e in doc["suites"][n] if not e["pass"]]
    for e in failed:
        print(f"FAILED {e['identity_name']} at {e['worst_at']}", file=sys.stderr)
    print(f"{len(failed)} failed; {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return 1 if failed else 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chiral-potts", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (("spectrum", "enumerate sectors and write sectors.json"),
                           ("eigvecs", "u basis and v/w eigenvectors of one sector"),
                           ("verify", "run verification suites")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--suite", action="append", choices=SUITES)
        p.add_argument("--kprime", type=float, action="append")
        p.add_argument("--N", type=int)
        p.add_argument("--L", type=int)
        p.add_argument("--m")
        p.add_argument("--r")
        p.add_argument("--Q")
        p.add_argument("--jobs", type=int)
        if name == "eigvecs":
            p.add_argument("--sector", required=True, help="sector id (prefix) from sectors.json")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except (ValueError, OSError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    if args.command == "spectrum":
        return cmd_spectrum(cfg)
    if args.command == "eigvecs":
        return cmd_eigvecs(cfg, args.sector)
    return cmd_verify(cfg)


if __name__ == "__main__":
    sys.exit(main())
