"""Command line front end."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .blockops import (
    eig_relation_check,
    l_matrix,
    m_delta_jump,
    u_matrix,
    verify_det_identities,
    verify_sum_identity,
)
from .conditions import SamplerConfig, check_conditions
from .io import SchemaError, load_operator, reference_from_dict
from .jacobi import PerturbedJacobi
from .mfunction import ac_mass, decay_rate, delta_of, m_values, point_masses
from .periodic import band_structure, torus_check
from .surface import IDENTITY, LevelSet, SurfacePoint, er_bbox, er_levelset

COMMANDS = (
    "discriminant",
    "bands",
    "torus-check",
    "mfun",
    "continue",
    "er-region",
    "verify-identities",
    "decay-rate",
    "conditions",
    "point-masses",
)

IDENTITY_TOL = 1e-8


@dataclass
class RunConfig:
    command: str
    input: str
    output: str | None = None
    format: str = "json"
    R: float | None = None
    bbox: tuple | None = None
    resolution: int = 256
    seed: int = 0
    samples: int = 20
    threads: int = 1


class UsageError(ValueError):
    pass


def _threads() -> int:
    raw = os.environ.get("FGS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _bbox(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("bbox needs four comma separated numbers")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fgs", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--input", required=True, help="operator JSON file")
    ap.add_argument("--output", help="write here instead of stdout")
    ap.add_argument("--format", choices=("json", "csv", "svg"), default="json")
    ap.add_argument("--R", type=float, dest="R")
    ap.add_argument("--bbox", type=_bbox)
    ap.add_argument("--resolution", type=int, default=256)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, default=20)
    return ap


def _num(x):
    x = complex(x)
    if x.imag == 0:
        return _real(x.real)
    return [_real(x.real), _real(x.imag)]


def _real(v: float):
    v = float(v)
    if math.isinf(v) or math.isnan(v):
        return str(v)
    return v


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _svg(polylines, bbox, bands=()) -> str:
    x0, y0, x1, y1 = bbox
    mx, my = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
    vb = f"{x0 - mx:.6g} {-(y1 + my):.6g} {x1 - x0 + 2 * mx:.6g} {y1 - y0 + 2 * my:.6g}"
    width = (x1 - x0) / 200
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{vb}">']
    for lo, hi in bands:
        out.append(
            f'<line x1="{lo:.6g}" y1="0" x2="{hi:.6g}" y2="0" stroke="red" stroke-width="{2 * width:.6g}"/>'
        )
    for pl in polylines:
        pts = " ".join(f"{x:.6g},{-y:.6g}" for x, y in pl)
        out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="{width:.6g}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _require_tail(J: PerturbedJacobi) -> None:
    if not J.has_periodic_tail:
        raise UsageError("this command needs an operator with a periodic tail")


def _sample_points(cfg: RunConfig, J) -> list:
    rng = np.random.default_rng(cfg.seed)
    bs = band_structure(delta_of(J))
    if cfg.bbox:
        x0, y0, x1, y1 = cfg.bbox
    else:
        lo, hi = bs.hull
        x0, y0, x1, y1 = lo - 1, -1.0, hi + 1, 1.0
    xs = rng.uniform(x0, x1, cfg.samples)
    ys = rng.uniform(y0, y1, cfg.samples)
    return [complex(x, y) for x, y in zip(xs, ys)]


def cmd_discriminant(cfg, J, doc):
    _require_tail(J)
    d = delta_of(J)
    return {"coefficients": [_num(c) for c in d.coeffs], "degree": d.degree, "leading": _num(d.leading)}, 0


def cmd_bands(cfg, J, doc):
    _require_tail(J)
    bs = band_structure(delta_of(J))
    body = {
        "bands": [[lo, hi] for lo, hi in bs.bands],
        "gaps": [{"lo": lo, "hi": hi, "open": op} for lo, hi, op in bs.gaps],
        "gamma": list(bs.gamma),
        "critical_values": list(bs.critical_values),
        "c0": bs.c0,
        "capacity": bs.capacity,
    }
    if cfg.format == "svg":
        lo, hi = bs.hull
        return _svg([], (lo, -0.5, hi, 0.5), bs.bands), 0
    if cfg.format == "csv":
        lines = ["band,lo,hi"] + [f"{k + 1},{lo!r},{hi!r}" for k, (lo, hi) in enumerate(bs.bands)]
        return "\n".join(lines) + "\n", 0
    return body, 0


def cmd_torus_check(cfg, J, doc):
    _require_tail(J)
    d = delta_of(J)
    window = max(3 * d.degree, cfg.samples)
    ok, dev = torus_check(J, d, window)
    return {"on_torus": ok, "deviation": dev, "window": window}, (0 if ok else 1)


def cmd_mfun(cfg, J, doc):
    _require_tail(J)
    rows = []
    for z in _sample_points(cfg, J):
        for sheet in (1, -1):
            m = complex(m_values(J, np.array([z]), sheet)[0])
            rows.append({"re_z": z.real, "im_z": z.imag, "sheet": sheet, "re_m": _real(m.real), "im_m": _real(m.imag)})
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["re_z", "im_z", "sheet", "re_m", "im_m"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue(), 0
    return {"values": rows}, 0


def _R(cfg) -> float:
    return math.inf if cfg.R is None else cfg.R


def cmd_continue(cfg, J, doc):
    _require_tail(J)
    rep = check_conditions(J, _R(cfg), config=SamplerConfig(resolution=min(cfg.resolution, 200)))
    poles = [{"z": _num(z), "sheet": s, "order": k} for z, s, k in rep.poles]
    return {"poles": poles, "R": _real(_R(cfg)), "samples_used": rep.samples_used}, 0


def cmd_er_region(cfg, J, doc):
    _require_tail(J)
    if cfg.R is None or cfg.R <= 1:
        raise UsageError("er-region needs --R greater than 1")
    d = delta_of(J)
    bbox = cfg.bbox or er_bbox(d, cfg.R)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ls: LevelSet = er_levelset(d, cfg.R, bbox, cfg.resolution)
    if cfg.format == "svg":
        return _svg(ls.polylines, bbox, band_structure(d).bands), 0
    return {
        "R": cfg.R,
        "bbox": list(bbox),
        "clipped": ls.clipped,
        "contours": [[[float(x), float(y)] for x, y in pl] for pl in ls.polylines],
    }, 0


def _identity_row(J, d, z):
    lam = SurfacePoint(z, 1)
    sum_res = verify_sum_identity(J, d, lam)
    eig_res = eig_relation_check(J, d, z)
    jump = m_delta_jump(J, d, lam) @ u_matrix(J, d, z) - l_matrix(J, d, lam)
    return {"lambda": _num(z), "sum_identity": sum_res, "eig_relation": eig_res, "jump_identity": float(np.abs(jump).max())}


def cmd_verify_identities(cfg, J, doc):
    _require_tail(J)
    d = delta_of(J)
    rng = np.random.default_rng(cfg.seed)
    zs = [complex(x, y) for x, y in zip(rng.uniform(-3, 3, cfg.samples), rng.uniform(0.2, 2, cfg.samples))]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        rows = list(pool.map(lambda z: _identity_row(J, d, z), zs))
    rep = verify_det_identities(J, d, [SurfacePoint(z, 1) for z in zs])
    det = {
        "u_constant": _num(rep.u_constant),
        "u_expected": rep.u_expected,
        "l_constant": _num(rep.l_constant),
        "l_expected_stated": rep.l_expected_stated,
        "l_expected_derived": rep.l_expected_derived,
        "jump_constant": _num(rep.jump_constant),
        "jump_expected_stated": rep.jump_expected_stated,
        "jump_expected_derived": rep.jump_expected_derived,
        "spreads": [rep.u_spread, rep.l_spread, rep.jump_spread],
        "u_zeros": [_num(z) for z in rep.u_zeros],
        "critical_values": list(rep.critical_values),
    }
    worst = max(max(r["sum_identity"], r["eig_relation"], r["jump_identity"]) for r in rows)
    ok = worst <= IDENTITY_TOL and rep.ok
    return {"samples": rows, "determinants": det, "ok": ok}, (0 if ok else 1)


def cmd_decay_rate(cfg, J, doc):
    ref = reference_from_dict(doc)
    if ref is None:
        _require_tail(J)
        ref = J.asymptotic()
    N = max(10 * ref.p, J.prefix_len)
    R = decay_rate(J, ref, N)
    return {"R": _real(R), "N": N}, 0


def _violation(v):
    return {"kind": v.kind, "location": _num(v.location), "sheet": v.sheet, "value": _real(v.value)}


def cmd_conditions(cfg, J, doc):
    _require_tail(J)
    rep = check_conditions(J, _R(cfg), config=SamplerConfig(resolution=min(cfg.resolution, 200)))
    body = {
        "ok": rep.ok,
        "continuation_ok": rep.continuation_ok,
        "band_pole_violations": [_violation(v) for v in rep.band_pole_violations],
        "band_edge_pole_orders": [[e, k] for e, k in rep.band_edge_pole_orders],
        "mm_sharp_zero_violations": [_violation(v) for v in rep.mm_sharp_zero_violations],
        "sharp_pair_pole_violations": [_violation(v) for v in rep.sharp_pair_pole_violations],
        "samples_used": rep.samples_used,
    }
    return body, (0 if rep.ok else 1)


def cmd_point_masses(cfg, J, doc):
    _require_tail(J)
    masses = point_masses(J)
    ac = ac_mass(J)
    total = ac + sum(w for _, w in masses)
    return {"masses": [{"x": x, "weight": w} for x, w in masses], "ac_mass": ac, "total": total}, 0


HANDLERS = {
    "discriminant": cmd_discriminant,
    "bands": cmd_bands,
    "torus-check": cmd_torus_check,
    "mfun": cmd_mfun,
    "continue": cmd_continue,
    "er-region": cmd_er_region,
    "verify-identities": cmd_verify_identities,
    "decay-rate": cmd_decay_rate,
    "conditions": cmd_conditions,
    "point-masses": cmd_point_masses,
}


def run(cfg: RunConfig) -> int:
    try:
        J, doc = load_operator(cfg.input)
        body, code = HANDLERS[cfg.command](cfg, J, doc)
    except (SchemaError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = body if isinstance(body, str) else _dump(body)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        input=args.input,
        output=args.output,
        format=args.format,
        R=args.R,
        bbox=args.bbox,
        resolution=args.resolution,
        seed=args.seed,
        samples=args.samples,
        threads=_threads(),
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
