"""Command-line harness: simulate / filter / smooth / divergence / eval.

Batch-oriented: every subcommand reads and writes files (or stdout for
scalar results and CSV tables) and is deterministic given its flags.
Malformed inputs exit nonzero with a message naming the offending field.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import fields

import numpy as np

from .densities import BernoulliRfs, LmbDensity
from .divergences import bhattacharyya_lmb, chi2_lmb, csd_lmb, kl_lmb, renyi_lmb
from .filters import FilterConfig, run_glmb_filter
from .gaussians import GaussianMixture
from .labels import Label
from .metrics import ospa, ospa2
from .sim import (
    Scenario,
    SimParams,
    filter_birth_for_scan,
    generate,
    observation_model,
    survival_model,
)
from .smoother import estimate_trajectories, run_msglmb, trajectory_stats

__all__ = ["main", "load_filter_config", "load_lmb_json", "load_tracks"]


def _hardware_threads() -> int:
    return os.cpu_count() or 1


def load_filter_config(path, threads: int | None = None) -> FilterConfig:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    names = {f.name for f in fields(FilterConfig)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown config field: {sorted(unknown)[0]}")
    if threads is not None:
        data["threads"] = threads
    return FilterConfig(**data)


def load_lmb_json(path) -> LmbDensity:
    """LMB file: {"tracks": [{"label": [s,i], "r": .., "density": {...}}]}."""
    with open(path) as fh:
        data = json.load(fh)
    if "tracks" not in data:
        raise ValueError(f"{path}: missing the 'tracks' field")
    out = {}
    for i, rec in enumerate(data["tracks"]):
        for key in ("label", "r", "density"):
            if key not in rec:
                raise ValueError(f"{path}: track {i} is missing the '{key}' field")
        dens = rec["density"]
        for key in ("weights", "means", "covariances"):
            if key not in dens:
                raise ValueError(f"{path}: track {i} density is missing '{key}'")
        label = Label(int(rec["label"][0]), int(rec["label"][1]))
        gm = GaussianMixture(dens["weights"], dens["means"], dens["covariances"])
        out[label] = BernoulliRfs(float(rec["r"]), gm)
    return LmbDensity(out)


def _dump_tracks(path, per_label: dict) -> None:
    """per_label: {Label: [(k, state, r, w), ...]} -> truth-shaped JSON."""
    body = {
        "tracks": [
            {
                "label": [int(l.birth_time), int(l.index)],
                "states": [
                    {
                        "k": int(k),
                        "x": [float(v) for v in x],
                        "r": float(r),
                        "w": float(w),
                    }
                    for k, x, r, w in sorted(states, key=lambda s: s[0])
                ],
            }
            for l, states in sorted(per_label.items())
        ]
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(body, fh, indent=1)
        fh.write("\n")


def load_tracks(path):
    """Trajectories from a tracks file or a scenario's truth block.

    Returns (label, start, [state vectors]) triples; scans within a label
    must be contiguous.
    """
    with open(path) as fh:
        data = json.load(fh)
    if "tracks" in data:
        records = data["tracks"]
    elif "truth" in data:
        records = data["truth"]
    else:
        raise ValueError(f"{path}: needs a 'tracks' or 'truth' field")
    out = []
    for i, rec in enumerate(records):
        if "label" not in rec or "states" not in rec:
            raise ValueError(f"{path}: record {i} needs 'label' and 'states' fields")
        states = sorted(rec["states"], key=lambda s: int(s["k"]))
        if not states:
            continue
        ks = [int(s["k"]) for s in states]
        if ks != list(range(ks[0], ks[0] + len(ks))):
            raise ValueError(f"{path}: record {i} has non-contiguous scans")
        out.append(
            (
                Label(int(rec["label"][0]), int(rec["label"][1])),
                ks[0],
                [np.asarray(s["x"], dtype=float) for s in states],
            )
        )
    return out


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(args) -> int:
    if args.params:
        with open(args.params) as fh:
            params = SimParams.from_dict(json.load(fh))
    else:
        params = SimParams()
    scenario = generate(params, seed=args.seed)
    scenario.save(args.out)
    return 0


def _models_from(scenario: Scenario):
    params = scenario.params
    return (
        lambda k: filter_birth_for_scan(params, k),
        survival_model(params),
        observation_model(params),
    )


def _cmd_filter(args) -> int:
    scenario = Scenario.load(args.scenario)
    cfg = load_filter_config(args.config, threads=args.threads)
    birth_for_scan, survival, obs = _models_from(scenario)
    t0 = time.perf_counter()
    _, records = run_glmb_filter(
        scenario.scans, birth_for_scan, survival, obs, cfg,
        estimator=args.estimator, threshold=cfg.existence_threshold,
    )
    total = time.perf_counter() - t0
    per_label: dict[Label, list] = {}
    for rec in records:
        for l, x in rec.estimates:
            per_label.setdefault(l, []).append((rec.scan, x, rec.existence[l], rec.map_weight))
    _dump_tracks(args.out, per_label)
    if args.report:
        body = {
            "total_elapsed": total,
            "scans": [
                {
                    "k": rec.scan,
                    "n_hypotheses": rec.n_hypotheses,
                    "discarded_l1": rec.discarded_l1,
                    "elapsed": rec.elapsed,
                    "map_weight": rec.map_weight,
                }
                for rec in records
            ],
        }
        with open(args.report, "w", newline="\n") as fh:
            json.dump(body, fh, indent=1)
            fh.write("\n")
    return 0


def _cmd_smooth(args) -> int:
    scenario = Scenario.load(args.scenario)
    cfg = load_filter_config(args.config, threads=args.threads)
    birth_for_scan, survival, obs = _models_from(scenario)
    post = run_msglmb(
        scenario.scans, birth_for_scan, survival, obs, cfg,
        candidates_per_hypothesis=cfg.gibbs_iterations, window=args.window,
    )
    estimates = estimate_trajectories(post, mode="top_hypothesis")
    map_w = post.map_hypothesis().weight
    per_label: dict[Label, list] = {}
    for est in estimates:
        exist = {}
        for h in post.hypotheses:
            for l, rec in h.records:
                if l == est.label:
                    for k in range(rec.start, rec.end + 1):
                        exist[k] = exist.get(k, 0.0) + h.weight
        per_label[est.label] = [
            (est.start + m, x, exist.get(est.start + m, 0.0), map_w)
            for m, x in enumerate(est.means)
        ]
    _dump_tracks(args.out, per_label)
    if args.stats:
        stats = trajectory_stats(post)
        body = {"traj_cardinality": [float(v) for v in stats.traj_cardinality]}
        try:
            body["length_dist"] = [float(v) for v in stats.length_dist]
        except ValueError:
            body["length_dist"] = None
        body["length_dist_of"] = {
            f"{l.birth_time},{l.index}": [float(v) for v in stats.length_dist_of(l)]
            for l, _ in post.map_hypothesis().records
        }
        with open(args.stats, "w", newline="\n") as fh:
            json.dump(body, fh, indent=1)
            fh.write("\n")
    return 0


def _cmd_divergence(args) -> int:
    a = load_lmb_json(args.a)
    b = load_lmb_json(args.b)
    if args.kind == "renyi":
        if args.alpha is None:
            raise ValueError("--alpha is required for --kind renyi")
        value = renyi_lmb(a, b, args.alpha)
    elif args.kind == "kl":
        value = kl_lmb(a, b)
    elif args.kind == "chi2":
        value = chi2_lmb(a, b)
    elif args.kind == "cs":
        value = csd_lmb(a, b, unit_u=args.unit_u)
    else:
        value = bhattacharyya_lmb(a, b)
    print(repr(value))
    return 0


def _positions(x: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(x, dtype=float)[:dim]


def _cmd_eval(args) -> int:
    scenario = Scenario.load(args.truth)
    tracks = load_tracks(args.tracks)
    dim = scenario.region.dim
    truth = [
        (l, s, [_positions(x, dim) for x in states])
        for l, s, states in scenario.truth_trajectories()
    ]
    est = [(l, s, [_positions(x, dim) for x in states]) for l, s, states in tracks]

    def states_at(trajs, k):
        return [st[k - s] for _, s, st in trajs if s <= k < s + len(st)]

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["k", "ospa", "ospa2"])
    for k, _ in scenario.scans:
        o1 = ospa(states_at(est, k), states_at(truth, k), args.ospa_c, args.ospa_p)
        lo = max(k - args.window + 1, scenario.scans[0][0])
        win = range(lo, k + 1)
        o2 = ospa2(est, truth, args.ospa_c, args.ospa_p, window=win)
        writer.writerow([k, repr(float(o1)), repr(float(o2))])
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lrfs", description="Labeled random finite set tracking toolkit"
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a scenario file")
    sim.add_argument("--params", help="JSON file of scenario parameters")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(fn=_cmd_simulate)

    flt = sub.add_parser("filter", help="run the GLMB filter over a scenario")
    flt.add_argument("--scenario", required=True)
    flt.add_argument("--config", required=True)
    flt.add_argument(
        "--estimator",
        default="glmb_estimator",
        choices=["glmb_estimator", "label_mam", "phd_mam", "phd_jom"],
    )
    flt.add_argument("--out", required=True)
    flt.add_argument("--report")
    flt.add_argument("--threads", type=int, default=None)
    flt.set_defaults(fn=_cmd_filter)

    smo = sub.add_parser("smooth", help="run the multi-scan smoother")
    smo.add_argument("--scenario", required=True)
    smo.add_argument("--config", required=True)
    smo.add_argument("--window", type=int, default=None)
    smo.add_argument("--out", required=True)
    smo.add_argument("--stats")
    smo.add_argument("--threads", type=int, default=None)
    smo.set_defaults(fn=_cmd_smooth)

    div = sub.add_parser("divergence", help="divergence between two LMB files")
    div.add_argument("--kind", required=True, choices=["renyi", "kl", "chi2", "cs", "bhatt"])
    div.add_argument("--a", required=True)
    div.add_argument("--b", required=True)
    div.add_argument("--alpha", type=float, default=None)
    div.add_argument("--unit-u", dest="unit_u", type=float, default=1.0)
    div.set_defaults(fn=_cmd_divergence)

    ev = sub.add_parser("eval", help="OSPA / OSPA(2) series as CSV on stdout")
    ev.add_argument("--truth", required=True)
    ev.add_argument("--tracks", required=True)
    ev.add_argument("--ospa-c", dest="ospa_c", type=float, required=True)
    ev.add_argument("--ospa-p", dest="ospa_p", type=float, default=1.0)
    ev.add_argument("--window", type=int, default=10)
    ev.set_defaults(fn=_cmd_eval)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        env = os.environ.get("LRFS_THREADS")
        args.threads = int(env) if env else _hardware_threads()
    elif hasattr(args, "threads") and os.environ.get("LRFS_THREADS"):
        args.threads = int(os.environ["LRFS_THREADS"])
    try:
        return args.fn(args)
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
