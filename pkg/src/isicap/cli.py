"""Command-line surface.

Subcommands:

    bounds    per-power bound table (CSV)
    figure1   radius-sweep of the closed-form gap terms (CSV)
    figure2   capacity/saturation sweep (CSV)
    simulate  decoder error-rate experiments (CSV)
    verify    randomized matrix-fact certificates (JSON)

A JSON config file supplies the channel and sweep parameters; flags override
the config.  Outputs are deterministic byte-for-byte for a fixed config and
seed.  Exit codes: 0 success, 2 unusable config or arguments, 3 no
applicable rows, 4 verification found violations.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BoundInapplicable, ConfigError, IsicapError
from .spectrum import DEFAULT_GRID, ChannelSpec, compute_profile
from .waterfill import (
    bound_report,
    capacity_C0,
    dbw_to_watts,
    pillow_terms,
    solve_theta1,
    watts_to_dbw,
)
from .channel_sim import ChannelLaw
from .decoder import run_error_experiment
from .verify import verify_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EMPTY = 3
EXIT_VIOLATION = 4

FLAG_NEAR_PSAT = "near_psat"
FLAG_INAPPLICABLE = "bound_inapplicable"
NEAR_PSAT_DBW = 0.5

_SCHEMAS = {
    "bounds": "#schema=isicap.bounds.v1",
    "figure1": "#schema=isicap.figure1.v1",
    "figure2": "#schema=isicap.figure2.v1",
    "simulate": "#schema=isicap.simulate.v1",
}

_DEFAULTS = {
    "channel": {"k": 2, "c": [1.0, 0.5, 0.5], "r": [1e-3, 1e-3, 1e-3]},
    "grid_size": DEFAULT_GRID,
    "bounds": {"p_dbw": "0:60:61"},
    "figure1": {"rs_log10": "-4:0:33", "p_dbw": [10.0, 30.0, 50.0]},
    "figure2": {"p_dbw": "20:56:73"},
    "simulate": {
        "n_list": [64, 128, 256],
        "p_dbw": -10.0,
        "rate_fraction": 0.25,
        "rate_bits": None,
        "trials": 500,
        "law": {"kind": "iid_uniform"},
    },
    "verify": {"samples": 200, "n_max": 64},
}


@dataclass
class RunConfig:
    spec: ChannelSpec
    grid_size: int
    seed: int
    threads: int
    out: Optional[str]
    sections: dict


def parse_grid(text: str) -> list[float]:
    """Either ``start:stop:count`` (inclusive linspace) or a comma list."""
    text = text.strip()
    try:
        if ":" in text:
            start_s, stop_s, count_s = text.split(":")
            count = int(count_s)
            if count < 1:
                raise ValueError
            return [float(v) for v in np.linspace(float(start_s), float(stop_s), count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}; want start:stop:count or a comma list") from exc


def _grid_from(value) -> list[float]:
    if isinstance(value, str):
        return parse_grid(value)
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    raise ConfigError(f"grid must be a string or list, got {type(value).__name__}")


def _law_from(obj: dict) -> ChannelLaw:
    try:
        return ChannelLaw(
            kind=obj.get("kind", "iid_uniform"),
            offset=tuple(obj["offset"]) if obj.get("offset") is not None else None,
            block_len=int(obj.get("block_len", 1)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad channel law: {exc}") from exc


def load_config(args: argparse.Namespace) -> RunConfig:
    merged = json.loads(json.dumps(_DEFAULTS))  # deep copy
    if args.config is not None:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        for key, value in user.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key].update(value)
            else:
                merged[key] = value
    try:
        spec = ChannelSpec.from_json(merged["channel"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad channel block: {exc}") from exc
    grid_size = int(merged.get("grid_size", DEFAULT_GRID))
    return RunConfig(
        spec=spec,
        grid_size=grid_size,
        seed=int(args.seed),
        threads=max(1, int(args.threads)),
        out=args.out,
        sections=merged,
    )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _emit(out: Optional[str], text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _write_csv(out: Optional[str], schema: str, header: Sequence[str], rows) -> None:
    lines = [schema, ",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _emit(out, "\n".join(lines) + "\n")


def _map_ordered(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


BOUNDS_HEADER = (
    "P_dBW",
    "C0",
    "C_LB1",
    "C_LB2",
    "delta1",
    "delta2",
    "Psat_dBW",
    "gap_cor1",
    "gap_cor2",
    "P_W",
    "Psat_W",
    "flag",
)


def _bounds_row(cfg: RunConfig, p_dbw: float):
    p_w = dbw_to_watts(p_dbw)
    try:
        rep = bound_report(cfg.spec, p_w, cfg.grid_size)
    except BoundInapplicable:
        profile = compute_profile(cfg.spec, cfg.grid_size)
        c0 = capacity_C0(profile, cfg.spec, p_w, cfg.grid_size)
        return (p_dbw, c0, None, None, None, None, None, None, None, p_w, None, FLAG_INAPPLICABLE)
    psat_dbw = None
    if rep.P_sat is not None and rep.P_sat > 0.0:
        psat_dbw = watts_to_dbw(rep.P_sat)
    flag = ""
    if psat_dbw is not None and abs(p_dbw - psat_dbw) <= NEAR_PSAT_DBW:
        flag = FLAG_NEAR_PSAT
    return (
        p_dbw,
        rep.C0,
        rep.C_LB1,
        rep.C_LB2,
        rep.delta1,
        rep.delta2,
        psat_dbw,
        rep.gap_cor1,
        rep.gap_cor2,
        p_w,
        rep.P_sat,
        flag,
    )


def _flag_exit(rows) -> int:
    """EXIT_EMPTY when every row is inapplicable; a stderr note (rows are
    still written, flagged) when only some are."""
    hit = sum(1 for row in rows if row[-1] == FLAG_INAPPLICABLE)
    if hit == len(rows):
        return EXIT_EMPTY
    if hit:
        print(
            f"warning: refined bounds inapplicable at {hit} of {len(rows)} grid points"
            " (rows flagged, lower-bound columns left empty)",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_bounds(cfg: RunConfig, args: argparse.Namespace) -> int:
    grid = _grid_from(args.grid if args.grid else cfg.sections["bounds"]["p_dbw"])
    if not grid:
        raise ConfigError("empty power grid")
    rows = _map_ordered(lambda p: _bounds_row(cfg, p), grid, cfg.threads)
    _write_csv(cfg.out, _SCHEMAS["bounds"], BOUNDS_HEADER, rows)
    return _flag_exit(rows)


FIGURE1_HEADER = ("r_s", "P_dBW", "bound", "term1", "term2", "term3", "P_W", "flag")


def cmd_figure1(cfg: RunConfig, args: argparse.Namespace) -> int:
    section = cfg.sections["figure1"]
    if args.grid:
        rs_values = [10.0 ** v for v in parse_grid(args.grid)]
    else:
        rs_values = [10.0 ** v for v in _grid_from(section["rs_log10"])]
    p_list = section["p_dbw"] if isinstance(section["p_dbw"], list) else _grid_from(section["p_dbw"])
    if not rs_values or not p_list:
        raise ConfigError("empty sweep")
    profile = compute_profile(cfg.spec, cfg.grid_size)

    def row(item):
        p_dbw, rs = item
        p_w = dbw_to_watts(p_dbw)
        try:
            t1, t2, t3 = pillow_terms(profile, cfg.spec, p_w, rs, cfg.grid_size)
        except BoundInapplicable:
            return (rs, p_dbw, None, None, None, None, p_w, FLAG_INAPPLICABLE)
        return (rs, p_dbw, t1 + t2 + t3, t1, t2, t3, p_w, "")

    items = [(p, rs) for p in p_list for rs in rs_values]
    rows = _map_ordered(row, items, cfg.threads)
    _write_csv(cfg.out, _SCHEMAS["figure1"], FIGURE1_HEADER, rows)
    return _flag_exit(rows)


FIGURE2_HEADER = ("P_dBW", "C0", "C_LB1", "C_LB2", "P_W", "flag")


def cmd_figure2(cfg: RunConfig, args: argparse.Namespace) -> int:
    grid = _grid_from(args.grid if args.grid else cfg.sections["figure2"]["p_dbw"])
    if not grid:
        raise ConfigError("empty power grid")

    def row(p_dbw: float):
        full = _bounds_row(cfg, p_dbw)
        return (full[0], full[1], full[2], full[3], full[9], full[11])

    rows = _map_ordered(row, grid, cfg.threads)
    _write_csv(cfg.out, _SCHEMAS["figure2"], FIGURE2_HEADER, rows)
    return _flag_exit(rows)


SIMULATE_HEADER = (
    "n",
    "R_bits",
    "P_dBW",
    "trials",
    "type1",
    "type2",
    "success",
    "wilson_lo",
    "wilson_hi",
    "P_W",
)


def cmd_simulate(cfg: RunConfig, args: argparse.Namespace) -> int:
    section = cfg.sections["simulate"]
    n_list = [int(v) for v in section["n_list"]]
    if not n_list:
        raise ConfigError("empty n_list")
    p_dbw = float(section["p_dbw"])
    p_w = dbw_to_watts(p_dbw)
    trials = int(section["trials"])
    law = _law_from(section.get("law", {}))
    if section.get("rate_bits") is not None:
        rate = float(section["rate_bits"])
    else:
        rep = bound_report(cfg.spec, p_w, cfg.grid_size)
        rate = float(section.get("rate_fraction", 0.25)) * rep.C_LB1
        if rate <= 0.0:
            raise ConfigError(
                f"derived rate {rate:.4g} is not positive at {p_dbw} dBW; give rate_bits"
            )
    rows = []
    for n in n_list:
        res = run_error_experiment(
            cfg.spec,
            n=n,
            R=rate,
            P=p_w,
            trials=trials,
            master_seed=cfg.seed,
            law=law,
            threads=cfg.threads,
            grid_size=cfg.grid_size,
        )
        rows.append(
            (n, rate, p_dbw, trials, res.type1, res.type2, res.success,
             res.wilson_lo, res.wilson_hi, p_w)
        )
    _write_csv(cfg.out, _SCHEMAS["simulate"], SIMULATE_HEADER, rows)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args: argparse.Namespace) -> int:
    section = cfg.sections["verify"]
    report = verify_report(
        samples=int(section["samples"]),
        master_seed=cfg.seed,
        n_max=int(section["n_max"]),
    )
    _emit(cfg.out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    if report["violations_total"] > 0:
        return EXIT_VIOLATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isicap",
        description="Capacity bounds and decoding experiments for interval ISI channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "bounds": (cmd_bounds, "per-power bound table (CSV)", True),
        "figure1": (cmd_figure1, "radius sweep of the gap terms (CSV)", True),
        "figure2": (cmd_figure2, "capacity saturation sweep (CSV)", True),
        "simulate": (cmd_simulate, "decoder error-rate experiment (CSV)", False),
        "verify": (cmd_verify, "randomized matrix-fact certificates (JSON)", False),
    }
    for name, (fn, help_text, has_grid) in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument(
            "--threads",
            type=int,
            default=os.cpu_count() or 1,
            help="worker threads (default: all cores)",
        )
        if has_grid:
            p.add_argument(
                "--grid",
                default=None,
                help="sweep override: start:stop:count or comma list "
                "(dBW; log10 radius sum for figure1)",
            )
        p.set_defaults(func=fn)
        if not has_grid:
            p.set_defaults(grid=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"isicap: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IsicapError as exc:
        print(f"isicap: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"isicap: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
