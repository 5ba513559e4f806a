"""Run the full grid in configs/listing1.cfg and print the three analysis tables.

The full grid is 9600 instances and single-path AD/LB at n=40 is slow with
the pure-python solver. ``--topos`` shrinks the topology count per (N, L)
for a quick look.
"""

import argparse
import dataclasses
import logging
from pathlib import Path

from traffic_eng.analysis import run_analysis
from traffic_eng.cli import rows_to_csv
from traffic_eng.experiment import parse_config, run_all, write_dataset

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=ROOT / "configs" / "listing1.cfg")
    ap.add_argument("--out", type=Path, default=ROOT / "runs" / "listing1")
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--topos", type=int, default=None, help="override topologies per (N, L)")
    ap.add_argument("--tms", type=int, default=None, help="override TMs per topology")
    ap.add_argument("--node-limit", type=int, default=None, help="branch-and-bound node cap")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = parse_config(args.config)
    over = {}
    if args.topos:
        over["nu_of_topos_per_n_l"] = args.topos
    if args.tms:
        over["nu_of_tms_per_topo"] = args.tms
    if args.node_limit:
        over["mip_node_limit"] = args.node_limit
    cfg = dataclasses.replace(cfg, **over)
    logging.info("%d instances", cfg.instance_count)

    ds = run_all(cfg, workers=args.workers)
    write_dataset(ds, args.out)
    ks = sorted(cfg.candidate_paths)
    for name in ("gap", "pathflow", "residualgap"):
        print(f"# {name}")
        print(rows_to_csv(run_analysis(name, ds.records, "LB", ks[0], ks[-1])))


if __name__ == "__main__":
    main()
