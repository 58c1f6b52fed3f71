#!/usr/bin/env python3
"""Straight-line reference computation of the cohort tables and KPIs.

Written independently of the Rust code: it reads the cohort directory with
the standard library only and writes hidden.csv, errors.csv, timeline.csv,
references.csv, kpis.csv and kpis.json. The golden test compares the engine's
output with these files byte for byte.

usage: golden_oracle.py COHORT_DIR RULES_TSV OUT_DIR [GAP_MINUTES TAIL_MINUTES]
       golden_oracle.py --user USER LOG NOTEBOOK SCHEMA RULES_TSV OUT_DIR [GAP TAIL]
"""
import datetime as dt
import json
import os
import sys
from decimal import Decimal, ROUND_HALF_UP
from fractions import Fraction

PHASES = ["Setup", "DataLoading", "Cleaning", "Visualization",
          "FeatureEngineering", "Modeling", "Evaluation", "Other"]
PREFIX = ["setup", "data_loading", "cleaning", "visualization",
          "feature_engineering", "modeling", "evaluation", "other"]
FORMAT_ERRORS = {"SyntaxError", "IndentationError", "TabError"}
WORD = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")


def pct2(part, total):
    v = Fraction(part * 100, total)
    d = Decimal(v.numerator) / Decimal(v.denominator)
    return str(d.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def f4(x):
    return "%.4f" % x


def epoch_ms(s):
    t = dt.datetime.fromisoformat(s.replace("Z", "+00:00"))
    epoch = dt.datetime(1970, 1, 1, tzinfo=dt.timezone.utc)
    delta = t - epoch
    return (delta.days * 86400 + delta.seconds) * 1000 + delta.microseconds // 1000


def canon(src):
    src = src.replace("\r\n", "\n").replace("\r", "\n")
    lines = [l.rstrip() for l in src.split("\n")]
    while lines and lines[0] == "":
        lines.pop(0)
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines)


def load_log(path):
    runs = []
    with open(path, "rb") as f:
        for raw in f.read().split(b"\n"):
            if not raw.strip():
                continue
            try:
                r = json.loads(raw.decode("utf-8"))
                runs.append({"seq": r["seq"], "ms": epoch_ms(r["started_at"]),
                             "source": r["source"],
                             "ename": r["error"]["ename"] if r["status"] == "error" else None})
            except Exception:
                pass
    runs.sort(key=lambda r: (r["ms"], r["seq"]))
    return runs


def load_notebook(path):
    nb = json.load(open(path, encoding="utf-8"))
    out = []
    for c in nb["cells"]:
        if c.get("cell_type") == "code":
            s = c["source"]
            out.append(s if isinstance(s, str) else "".join(s))
    return out


def load_schema(path):
    out = []
    for line in open(path, encoding="utf-8").read().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def load_rules(path):
    rules = []
    for line in open(path, encoding="utf-8").read().splitlines():
        if line.strip() == "[format_errors]":
            break
        if not line.strip() or line.strip().startswith("#"):
            continue
        prio, phase, pattern = line.split("\t", 2)
        rules.append((int(prio), PHASES.index(phase), pattern))
    rules.sort(key=lambda r: -r[0])
    return rules


def refs(source, attr):
    n = len(attr)
    for i in range(0, len(source) - n + 1):
        if source[i:i + n] != attr:
            continue
        if (i == 0 or source[i - 1] not in WORD) and (i + n == len(source) or source[i + n] not in WORD):
            return True
    return False


def pattern_in(source, pat):
    n = len(pat)
    for i in range(0, len(source) - n + 1):
        if source[i:i + n] != pat:
            continue
        left = pat[0] not in WORD or i == 0 or source[i - 1] not in WORD
        right = pat[-1] not in WORD or i + n == len(source) or source[i + n] not in WORD
        if left and right:
            return True
    return False


def import_only(source):
    count = 0
    depth = 0
    for line in source.splitlines():
        code = line.split("#")[0].strip()
        if depth > 0:
            depth += code.count("(") - code.count(")")
            continue
        if not code or code[0] in "%!":
            continue
        if not (code.startswith("import ") or (code.startswith("from ") and " import " in code)):
            return False
        count += 1
        depth += code.count("(") - code.count(")")
    return count > 0


def phase_of(source, rules):
    for _, phase, pat in rules:
        hit = import_only(source) if pat == "@import_only" else pattern_in(source, pat)
        if hit:
            return phase
    return 7


def main(argv):
    if argv[0] == "--user":
        user, log, nb, schema_path, rules_path, out = argv[1:7]
        users = [(user, log, nb)]
        rest = argv[7:]
    else:
        root, rules_path, out = argv[0:3]
        schema_path = os.path.join(root, "schema.txt")
        users = [(u, os.path.join(root, u, "log.jsonl"), os.path.join(root, u, "final.ipynb"))
                 for u in sorted(os.listdir(root)) if os.path.isdir(os.path.join(root, u))]
        rest = argv[3:]
    gap = float(rest[0]) if rest else 30.0
    tail = float(rest[1]) if len(rest) > 1 else 1.0
    tail_ms = int(round(tail * 60000))
    schema = load_schema(schema_path)
    rules = load_rules(rules_path)
    os.makedirs(out, exist_ok=True)

    hidden_total = final_total = 0
    kinds = [0, 0, 0]
    attr_counts = [0] * len(schema)
    all_runs = 0
    timeline_lines = ["user_id,seq,offset_minutes,session_index"]
    kpis = []

    for user, log_path, nb_path in users:
        runs = load_log(log_path)
        finals = set(canon(c) for c in load_notebook(nb_path))
        n = len(runs)
        all_runs += n

        flags = [canon(r["source"]) in finals for r in runs]
        hidden = flags.count(False)
        hidden_total += hidden
        final_total += flags.count(True)

        fmt = exe = 0
        for r in runs:
            if r["ename"] is None:
                kinds[0] += 1
            elif r["ename"] in FORMAT_ERRORS:
                kinds[1] += 1
                fmt += 1
            else:
                kinds[2] += 1
                exe += 1

        # sessions
        session = []
        sid = 0
        for i, r in enumerate(runs):
            if i > 0 and (r["ms"] - runs[i - 1]["ms"]) / 60000.0 > gap:
                sid += 1
            session.append(sid)
        sessions = sid + 1 if runs else 0
        for i, r in enumerate(runs):
            off = (r["ms"] - runs[0]["ms"]) / 60000.0
            timeline_lines.append("%s,%d,%s,%d" % (user, r["seq"], f4(off), session[i]))

        # durations and phases
        phase_ms = [0] * 8
        for i, r in enumerate(runs):
            if i + 1 < n and session[i + 1] == session[i]:
                d = runs[i + 1]["ms"] - r["ms"]
            else:
                d = tail_ms
            phase_ms[phase_of(r["source"], rules)] += d
        active = sum(phase_ms)

        referenced = set()
        in_final = set()
        for i, r in enumerate(runs):
            for j, a in enumerate(schema):
                if refs(r["source"], a):
                    if j not in referenced:
                        pass
                    referenced.add(j)
                    if flags[i]:
                        in_final.add(j)
        for j, a in enumerate(schema):
            attr_counts[j] += sum(1 for r in runs if refs(r["source"], a))

        ref_names = [schema[j] for j in range(len(schema)) if j in referenced]
        fin_names = [schema[j] for j in range(len(schema)) if j in in_final]
        hid_names = [schema[j] for j in range(len(schema)) if j in referenced and j not in in_final]

        row = {}
        row["user_id"] = user
        row["total_runs"] = n
        row["hidden_runs"] = hidden
        row["hidden_rate"] = hidden / n if n else 0.0
        row["error_runs"] = fmt + exe
        row["error_rate"] = (fmt + exe) / n if n else 0.0
        row["format_error_runs"] = fmt
        row["format_error_rate"] = fmt / n if n else 0.0
        row["session_count"] = sessions
        row["active_minutes"] = active / 60000.0
        for p in range(8):
            row[PREFIX[p] + "_minutes"] = phase_ms[p] / 60000.0
        for p in range(8):
            row[PREFIX[p] + "_share"] = phase_ms[p] / active if active else 0.0
        row["features_referenced"] = ref_names
        row["features_in_final"] = fin_names
        row["features_hidden_only"] = hid_names
        row["wasted_reference_share"] = len(hid_names) / max(1, len(ref_names))
        row["no_runs"] = n == 0
        kpis.append(row)

    def write(name, text):
        with open(os.path.join(out, name), "w", encoding="utf-8", newline="") as f:
            f.write(text)

    if all_runs:
        write("hidden.csv", "label,runs,pct\nHidden Cells,%d,%s\nFinal Notebook Cells,%d,%s\n" % (
            hidden_total, pct2(hidden_total, all_runs), final_total, pct2(final_total, all_runs)))
        labels = ["No Error", "Format Error", "Execution Error"]
        write("errors.csv", "label,runs,pct\n" + "".join(
            "%s,%d,%s\n" % (labels[k], kinds[k], pct2(kinds[k], all_runs)) for k in range(3)))
        order = sorted(range(len(schema)), key=lambda j: (-attr_counts[j], j))
        write("references.csv", "attribute,runs_referencing,total_runs,pct\n" + "".join(
            "%s,%d,%d,%s\n" % (schema[j], attr_counts[j], all_runs, pct2(attr_counts[j], all_runs))
            for j in order))
    write("timeline.csv", "\n".join(timeline_lines) + "\n")

    cols = list(kpis[0].keys())
    lines = [",".join(cols)]
    for row in kpis:
        cells = []
        for c in cols:
            v = row[c]
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, float):
                cells.append(f4(v))
            elif isinstance(v, list):
                cells.append(";".join(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    write("kpis.csv", "\n".join(lines) + "\n")
    write("kpis.json", json.dumps(kpis, indent=2, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main(sys.argv[1:])
