"""Solve the built-in six-node case study and write its artefacts.

Writes the scenario file, the solve report and the DOT state graph into
the output directory (default: ./out).
"""

import argparse
from pathlib import Path

from secgame import (
    UtilityEngine, backward_induct, builtin_case_study, export_graph, export_report,
    generate_states, security_risk, serialize_scenario,
)
from secgame.casestudy import COMPROMISED


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="out")
    p.add_argument("--strategy-mode", default="uniform-support")
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    s = builtin_case_study()
    g = generate_states(s, COMPROMISED)
    e = backward_induct(g, UtilityEngine(s), strategy_mode=args.strategy_mode)

    (out / "case_study.json").write_text(serialize_scenario(s))
    (out / "case_study_report.json").write_text(export_report(s, g, e))
    (out / "case_study.dot").write_text(export_graph(g, e))

    for st in g.states:
        print(f"{st.id:3s} focus={','.join(st.focus):12s} v={e.values[st.id]:g}")
    risk = security_risk(e, g)
    print(f"security risk {risk.value:g} ({risk.verdict}); files in {out}/")


if __name__ == "__main__":
    main()
