#!/usr/bin/env python3
"""End-to-end checks for the seqmix command line tool.

Generates a small weighted fixture with a gating covariate, runs every
subcommand, and asserts the documented exit codes and byte-identical reruns.
"""

import csv
import json
import random
import subprocess
import sys
import tempfile
from pathlib import Path

BINARY = sys.argv[1] if len(sys.argv) > 1 else "seqmix"

STATES = ["EM", "FE", "JL", "TR"]


def make_fixture(path: Path, n=60, T=10, seed=7):
    rng = random.Random(seed)
    thetas = {0: [STATES[t % 2] for t in range(T)], 1: [STATES[2 + t % 2] for t in range(T)]}
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "weight", "exam", "region"] + [f"m{t+1}" for t in range(T)])
        for i in range(n):
            exam = i % 2
            g = 1 if rng.random() < (0.8 if exam else 0.2) else 0
            row = []
            for t in range(T):
                if rng.random() < 0.85:
                    row.append(thetas[g][t])
                else:
                    row.append(rng.choice(STATES))
            weight = round(0.5 + rng.random(), 3)
            region = rng.choice(["north", "south", "west"])
            writer.writerow([f"id{i+1}", weight, exam, region] + row)


def run(*args, expect=0):
    proc = subprocess.run([BINARY] + list(args), capture_output=True, text=True)
    if proc.returncode != expect:
        print(f"command {' '.join(args)}\nexpected exit {expect}, got {proc.returncode}")
        print(proc.stdout)
        print(proc.stderr)
        sys.exit(1)
    return proc


def main():
    tmp = Path(tempfile.mkdtemp(prefix="seqmix_cli_"))
    data = tmp / "toy.csv"
    make_fixture(data)
    common = ["--input", str(data), "--id-col", "id", "--weight-col", "weight",
              "--seq-prefix", "m", "--covariates", "exam,region"]

    # summarize
    out1 = tmp / "sum"
    run("summarize", *common, "--out", str(out1), "--distances")
    for name in ["summary/state_distribution.csv", "summary/entropy.csv",
                 "summary/duplicates.csv", "summary/weights.csv",
                 "summary/observed_states.csv", "distances.csv"]:
        assert (out1 / name).exists(), name
    header = (out1 / "summary/state_distribution.csv").read_text().splitlines()[0]
    assert header == "time," + ",".join(sorted(STATES)), header

    # duplicate report group sizes match an independent tabulation
    with data.open() as fh:
        reader = csv.DictReader(fh)
        patterns = {}
        for rec in reader:
            key = tuple(rec[f"m{t+1}"] for t in range(10))
            patterns[key] = patterns.get(key, 0) + 1
    dup_rows = (out1 / "summary/duplicates.csv").read_text().splitlines()[1:]
    sizes = sorted(int(line.split(",")[1]) for line in dup_rows)
    assert sizes == sorted(patterns.values()), (sizes, sorted(patterns.values()))

    # trimming changes T
    out_trim = tmp / "sum_trim"
    run("summarize", *common, "--time-first", "2", "--time-last", "9", "--out", str(out_trim))
    rows = (out_trim / "summary/entropy.csv").read_text().splitlines()
    assert len(rows) == 1 + 8, rows

    # fit: covariate gating
    out2 = tmp / "fit"
    run("fit", *common, "--type", "CC", "--G", "2", "--gating", "covariate",
        "--gating-covariates", "exam", "--seed", "11", "--out", str(out2))
    model = json.loads((out2 / "model.json").read_text())
    assert model["model"]["type"] == "CC"
    assert model["converged"] is True
    assert len(model["map"]) == 60
    assert (out2 / "z.csv").exists() and (out2 / "gating.csv").exists()

    # byte-identical rerun with the same seed
    out3 = tmp / "fit_again"
    run("fit", *common, "--type", "CC", "--G", "2", "--gating", "covariate",
        "--gating-covariates", "exam", "--seed", "11", "--out", str(out3))
    assert (out2 / "model.json").read_bytes() == (out3 / "model.json").read_bytes()
    assert (out2 / "z.csv").read_bytes() == (out3 / "z.csv").read_bytes()

    # config file keys mirror flags; flags override the file
    cfg = tmp / "fit.cfg"
    cfg.write_text(
        f"input={data}\nid-col=id\nweight-col=weight\nseq-prefix=m\n"
        "covariates=exam,region\ntype=CC\nG=2\ngating=covariate\n"
        "gating-covariates=exam\nseed=11\n")
    out_cfg = tmp / "fit_cfg"
    run("fit", "--config", str(cfg), "--out", str(out_cfg))
    assert (out_cfg / "model.json").read_bytes() == (out2 / "model.json").read_bytes()

    # invalid spec: UCN with G=2 aliases CCN
    proc = run("fit", *common, "--type", "UCN", "--G", "2", "--seed", "1",
               "--out", str(tmp / "bad"), expect=2)
    assert "CCN" in proc.stderr

    # missing input file
    run("fit", "--input", str(tmp / "missing.csv"), "--seq-prefix", "m", "--G", "1",
        "--seed", "1", expect=2)

    # select with a small grid plus forward stepwise
    out4 = tmp / "select"
    run("select", *common, "--types", "CC,CCN", "--g-min", "1", "--g-max", "3",
        "--stepwise", "forward", "--stepwise-covariates", "exam,region",
        "--seed", "11", "--threads", "2", "--out", str(out4))
    assert (out4 / "grid.csv").exists()
    assert (out4 / "stepwise.csv").exists()
    best = json.loads((out4 / "model.json").read_text())
    assert best["model"]["G"] >= 1
    steps = (out4 / "stepwise.csv").read_text().splitlines()
    assert steps[0] == "step,action,G,type,covariates,gating_type,bic,accepted"
    assert steps[-1].split(",")[1] == "Stop"

    # bootstrap SEs from the fitted covariate model
    out5 = tmp / "boot"
    run("bootstrap", *common, "--model", str(out2 / "model.json"), "-B", "8",
        "--seed", "3", "--out", str(out5))
    se_lines = (out5 / "se.csv").read_text().splitlines()
    assert se_lines[0] == "component,sps,coefficient,estimate,se"
    assert len(se_lines) == 1 + 2  # one non-baseline component x (intercept, exam)

    # bootstrap rerun is byte-identical
    out6 = tmp / "boot2"
    run("bootstrap", *common, "--model", str(out2 / "model.json"), "-B", "8",
        "--seed", "3", "--out", str(out6))
    assert (out5 / "se.csv").read_bytes() == (out6 / "se.csv").read_bytes()

    # bootstrap without a model file is an input error
    run("bootstrap", *common, "--model", str(tmp / "nope.json"), "--seed", "3", expect=2)

    print("cli checks passed")


if __name__ == "__main__":
    main()
