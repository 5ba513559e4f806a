"""Share of traffic carried by each candidate-path index, per objective."""

import argparse

from traffic_eng.analysis import analyze_pathflow
from traffic_eng.experiment import config_from_mapping, run_all


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--l", type=int, default=20)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--topos", type=int, default=20)
    ap.add_argument("--load", type=float, default=0.3)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    cfg = config_from_mapping(dict(
        N={args.n}, L={args.l}, nu_of_tms_per_topo=1, nu_of_topos_per_n_l=args.topos,
        capacity_type={"EDGE_BETWEENNESS"}, capacity_set={30, 35, 40}, weight_setting={"INV_CAP"},
        tm_types={"GRAVITY"}, network_load=[args.load], objectives={"LB", "AD", "MCR"},
        candidate_paths={args.k}, routing_strategies={"MULTIPATH"},
    ))
    records = run_all(cfg, workers=args.workers).records
    for obj in ("LB", "AD", "MCR"):
        s = analyze_pathflow(records, obj, k=args.k)
        total = sum(s.mean.values())
        shares = "  ".join(f"p{i}={100 * s.mean[i] / total:5.1f}%" for i in sorted(s.mean))
        print(f"{obj:>3}  {shares}")


if __name__ == "__main__":
    main()
