"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 I/O or parse error,
3 solver non-convergence. Errors print one ``error[CODE]: ...`` line on
stderr followed by an explanation.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import casestudy
from .errors import ParseError, ScenarioError, SchemaError, SolverError
from .model import GameParams, Scenario, validate_scenario
from .scenario_io import (
    export_graph, export_graph_structured, export_report, load_report, load_scenario,
)
from .solver import (
    STRATEGY_MODES, backward_induct, shapley_iterate, solve_matrix_game, solve_oracle,
)
from .states import generate_states
from .utility import UtilityEngine

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_SOLVER = 0, 1, 2, 3
COMMANDS = ("validate", "generate", "solve", "report", "case-study")
FORMATS = ("text", "structured", "dot")


@dataclass
class CliConfig:
    command: str
    scenario_path: Optional[str] = None
    output_path: Optional[str] = None
    format: Optional[str] = None
    discount: Optional[float] = None
    delta: Optional[float] = None
    strategy_mode: str = "lp-vertex"
    seed: Optional[int] = None
    compromised: Sequence[str] = ()
    lenient: bool = False

    def check(self):
        if self.format == "dot" and self.command not in ("generate", "solve"):
            raise ValueError("--format dot only applies to generate and solve")
        if self.command in ("validate", "generate", "solve", "report") and not self.scenario_path:
            raise ValueError(f"{self.command} needs an input file")


class CliError(Exception):
    def __init__(self, code: str, status: int, message: str, detail: str = ""):
        super().__init__(message)
        self.code, self.status, self.detail = code, status, detail


def _color() -> bool:
    return os.environ.get("SECGAME_COLOR", "").lower() in ("1", "yes", "always")


def _verdict(text: str, safe: bool) -> str:
    if not _color():
        return text
    return f"\033[{32 if safe else 31}m{text}\033[0m"


def _num(x: float) -> str:
    if abs(x - round(x)) < 1e-9:
        return str(int(round(x)))
    return f"{x:.6g}"


def format_matrix(row_names, cols, entries, title: str) -> str:
    header = [title] + list(cols)
    body = [[name] + [_num(v) for v in row] for name, row in zip(row_names, entries)]
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    fmt = lambda r: " | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([fmt(header), sep] + [fmt(r) for r in body])


def _strategy(names, probs) -> str:
    return "(" + ", ".join(f"{n}={_num(p)}" for n, p in zip(names, probs)) + ")"


def _params(s: Scenario, cfg: CliConfig) -> GameParams:
    gp = s.game_params
    if cfg.discount is not None:
        gp = dataclasses.replace(gp, discount=cfg.discount)
    if cfg.delta is not None:
        gp = dataclasses.replace(gp, convergence_delta=cfg.delta)
    return gp


def _load(cfg: CliConfig) -> Scenario:
    try:
        return load_scenario(cfg.scenario_path, strict=not cfg.lenient)
    except OSError as exc:
        raise CliError("IO", EXIT_IO, f"cannot read {cfg.scenario_path}: {exc.strerror}") from None
    except ParseError as exc:
        raise CliError("PARSE", EXIT_IO, f"{cfg.scenario_path}: {exc}") from None
    except SchemaError as exc:
        raise CliError("SCHEMA", EXIT_IO, f"{cfg.scenario_path}: {exc}") from None
    except ScenarioError as exc:
        raise CliError("INVALID", EXIT_INVALID, str(exc),
                       "\n".join(str(v) for v in exc.violations)) from None


def _solve(s: Scenario, cfg: CliConfig, compromised=None):
    params = _params(s, cfg)
    s = dataclasses.replace(s, game_params=params)
    problems = validate_scenario(s)
    if problems:
        raise CliError("INVALID", EXIT_INVALID, f"scenario invalid: {problems[0]}",
                       "\n".join(map(str, problems)))
    try:
        g = generate_states(s, compromised or cfg.compromised or None)
    except ScenarioError as exc:
        raise CliError("INVALID", EXIT_INVALID, str(exc)) from None
    engine = UtilityEngine(s)
    try:
        if g.is_acyclic():
            e = backward_induct(g, engine, params, strategy_mode=cfg.strategy_mode)
        else:
            e = shapley_iterate(g, engine, params, strategy_mode=cfg.strategy_mode)
    except SolverError as exc:
        raise CliError("NONCONVERGENCE", EXIT_SOLVER, str(exc)) from None
    return s, g, e


def render_report(doc: dict) -> str:
    head = doc["headline"]
    diag = doc["diagnostics"]
    out = [f"security risk: {_num(head['security_risk'])} at {head['initial_state']} "
           f"({_verdict(head['verdict'], head['safe'])})",
           f"method: {diag['method']}, iterations: {diag['iterations']}, "
           f"residual: {diag['residual']:.3g}", ""]
    for st in doc["states"]:
        out.append(f"{st['id']}  v = {_num(st['value'])}" + ("  [terminal]" if st["terminal"] else ""))
        m = st.get("matrix")
        if m:
            out.append(format_matrix(m["rows"], m["cols"], m["entries"], st["id"]))
            out.append("attacker " + _strategy(m["rows"], st["attacker_strategy"]))
            out.append("defender " + _strategy(m["cols"], st["defender_strategy"]))
        out.append("")
    return "\n".join(out).rstrip() + "\n"


def _emit(text: str, cfg: CliConfig):
    if cfg.output_path:
        try:
            with open(cfg.output_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise CliError("IO", EXIT_IO, f"cannot write {cfg.output_path}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def cmd_validate(cfg: CliConfig) -> int:
    try:
        _load(cfg)
    except CliError as exc:
        if exc.status != EXIT_INVALID:
            raise
        lines = exc.detail.splitlines()
        sys.stdout.write(f"{len(lines)} violations\n" + "".join(f"  {v}\n" for v in lines))
        return EXIT_INVALID
    sys.stdout.write("0 violations\n")
    return EXIT_OK


def cmd_generate(cfg: CliConfig) -> int:
    s = _load(cfg)
    try:
        g = generate_states(s, cfg.compromised or None)
    except ScenarioError as exc:
        raise CliError("INVALID", EXIT_INVALID, str(exc)) from None
    fmt = cfg.format or "dot"
    if fmt == "dot":
        _emit(export_graph(g), cfg)
    elif fmt == "structured":
        _emit(export_graph_structured(g), cfg)
    else:
        lines = []
        for st in g.states:
            rows = ", ".join(f"{a}@{t}" for a, t in st.attacker_actions) or "-"
            lines.append(f"{st.id} focus={','.join(st.focus)} A=[{rows}] "
                         f"D=[{', '.join(st.defender_actions)}]"
                         + (" terminal" if st.is_terminal else ""))
        _emit("\n".join(lines) + "\n", cfg)
    return EXIT_OK


def cmd_solve(cfg: CliConfig) -> int:
    s, g, e = _solve(_load(cfg), cfg)
    fmt = cfg.format or "structured"
    if fmt == "dot":
        _emit(export_graph(g, e), cfg)
    else:
        text = export_report(s, g, e)
        if fmt == "text":
            text = render_report(load_report(text.encode()))
        _emit(text, cfg)
    return EXIT_OK


def cmd_report(cfg: CliConfig) -> int:
    try:
        doc = load_report(cfg.scenario_path)
    except OSError as exc:
        raise CliError("IO", EXIT_IO, f"cannot read {cfg.scenario_path}: {exc.strerror}") from None
    except (ParseError, SchemaError) as exc:
        raise CliError("PARSE", EXIT_IO, f"{cfg.scenario_path}: {exc}") from None
    if (cfg.format or "text") == "structured":
        _emit(open(cfg.scenario_path, encoding="utf-8").read(), cfg)
    else:
        _emit(render_report(doc), cfg)
    return EXIT_OK


def cmd_case_study(cfg: CliConfig) -> int:
    s = casestudy.builtin_case_study()
    if cfg.scenario_path:
        s = _load(cfg)
    s, g, e = _solve(s, cfg, compromised=casestudy.COMPROMISED)
    out = []
    for sid, published in (("S0", casestudy.PUBLISHED_S0), ("S2", casestudy.PUBLISHED_S2)):
        m = e.matrices[sid]
        out.append(format_matrix(m.row_names(), m.cols, m.entries, sid))
        out.append("published:")
        out.append(format_matrix(m.row_names(), m.cols, published, sid))
        if m.raw is not None:
            out.append("before deception folding:")
            out.append(format_matrix(m.raw.row_names(), m.raw.cols, m.raw.entries, sid))
        x, y = e.strategies[sid]
        out.append(f"v({sid}) = {_num(e.values[sid])}")
        out.append("attacker " + _strategy(m.row_names(), x))
        out.append("defender " + _strategy(m.cols, y))
        if sid == "S0":
            out.append("published attacker " + _strategy(m.row_names(),
                                                         casestudy.PUBLISHED_S0_ATTACKER))
        out.append("")
    value = e.values[g.initial_state]
    safe = value <= 0
    out.append(f"security risk: {_num(value)} ({_verdict('safe' if safe else 'not safe', safe)})")
    if cfg.seed is not None:
        rng = np.random.default_rng(cfg.seed)
        worst = 0.0
        for _ in range(100):
            M = rng.uniform(-100, 100, rng.integers(1, 7, size=2))
            worst = max(worst, abs(solve_matrix_game(M).value - solve_oracle(M).value))
        out.append(f"LP vs support enumeration on 100 random games (seed {cfg.seed}): "
                   f"max |diff| = {worst:.2e}")
    _emit("\n".join(out) + "\n", cfg)
    return EXIT_OK


HANDLERS = {"validate": cmd_validate, "generate": cmd_generate, "solve": cmd_solve,
            "report": cmd_report, "case-study": cmd_case_study}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="secgame", description=(
        "Attack/defense stochastic game engine: generate the state graph of a "
        "network scenario, solve it and report the network's security risk."))
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("scenario_path", nargs="?", metavar="FILE",
                   help="scenario file (a saved report for `report`)")
    p.add_argument("-o", "--output", dest="output_path")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--discount", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--strategy-mode", choices=STRATEGY_MODES, default="lp-vertex")
    p.add_argument("--seed", type=int,
                   help="case-study: also cross-check the LP solver on seeded random games")
    p.add_argument("--compromised", action="append", default=[], metavar="NODE",
                   help="initially compromised node (repeatable; default: all entrance nodes)")
    p.add_argument("--lenient", action="store_true",
                   help="warn about unknown fields instead of rejecting them")
    return p


def run(cfg: CliConfig) -> int:
    try:
        cfg.check()
        return HANDLERS[cfg.command](cfg)
    except ValueError as exc:
        print(f"error[USAGE]: {exc}", file=sys.stderr)
        return EXIT_IO
    except CliError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        if exc.detail:
            print(exc.detail, file=sys.stderr)
        return exc.status


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = CliConfig(**{f.name: getattr(args, f.name) for f in dataclasses.fields(CliConfig)
                       if hasattr(args, f.name)})
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
