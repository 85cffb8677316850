"""Command-line harness: ``macres <subcommand> ...``.

Every run writes a JSON manifest (seed, parameters, version). CSV outputs
start with a units comment line, then a header; see docs/formats.md.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import MacresError
from .info_measures import density_moments
from .mac_model import Mac, WiretapMac, joint, load_channel, output_distribution
from .prob_core import FiniteDistribution


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _pair(text: str) -> tuple[float, float]:
    v = _floats(text)
    if len(v) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated rates, e.g. 0.75,0.45")
    return v[0], v[1]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def write_csv(path: Path, units: str, header: list[str], rows: list) -> None:
    rows = sorted(rows, key=lambda r: tuple(r[:2]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# units: {units}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def write_manifest(args, extra: dict | None = None) -> Path:
    if args.manifest:
        path = Path(args.manifest)
    elif getattr(args, "out", None):
        path = Path(str(args.out) + ".manifest.json")
    else:
        path = Path(f"macres-{args.command}.manifest.json")
    params = {k: v for k, v in vars(args).items() if k not in ("func", "manifest")}
    doc = {"version": __version__, "command": args.command, "seed": params.get("seed"),
           "parameters": params}
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return path


def _inputs(mac: Mac, args) -> tuple[FiniteDistribution, FiniteDistribution]:
    qx = FiniteDistribution(mac.x_alphabet, args.qx) if args.qx else FiniteDistribution.uniform(mac.x_alphabet)
    qy = FiniteDistribution(mac.y_alphabet, args.qy) if args.qy else FiniteDistribution.uniform(mac.y_alphabet)
    return qx, qy


def _plain(ch, want_wiretap: bool = False):
    if want_wiretap:
        if not isinstance(ch, WiretapMac):
            raise MacresError("this command needs a wiretap channel file (with legit and tap)")
        return ch
    return ch.legit if isinstance(ch, WiretapMac) else ch


# -- subcommands ----------------------------------------------------------

def cmd_info(args) -> int:
    from .rate_region import corner_points

    ch = load_channel(args.channel)
    macs = [("legit", ch.legit), ("tap", ch.tap)] if isinstance(ch, WiretapMac) else [("channel", ch)]
    summary = {}
    for label, mac in macs:
        qx, qy = _inputs(mac, args)
        j = joint(mac, qx, qy)
        c1, c2 = corner_points(mac, qx, qy)
        disp = {
            "V(X;Z|Y)": density_moments(j, (0,), (2,), (1,)).variance,
            "V(Y;Z)": density_moments(j, (1,), (2,)).variance,
            "V(X;Z)": density_moments(j, (0,), (2,)).variance,
            "V(Y;Z|X)": density_moments(j, (1,), (2,), (0,)).variance,
        }
        ixyz = density_moments(j, (0, 1), (2,)).mean
        print(f"[{label}] {mac.name}")
        print(f"  I(X,Y;Z) = {ixyz:.6f} nats")
        print(f"  corner 1 (I(X;Z|Y), I(Y;Z)) = ({c1[0]:.6f}, {c1[1]:.6f})")
        print(f"  corner 2 (I(X;Z), I(Y;Z|X)) = ({c2[0]:.6f}, {c2[1]:.6f})")
        print("  dispersions: " + ", ".join(f"{k}={v:.6f}" for k, v in disp.items()))
        summary[label] = {"I(X,Y;Z)": ixyz, "corner1": c1, "corner2": c2, "dispersions": disp}
    write_manifest(args, {"results": summary})
    return 0


def cmd_region(args) -> int:
    from .rate_region import SearchConfig, region_membership

    mac = _plain(load_channel(args.channel))
    if args.qz:
        qz = FiniteDistribution(mac.z_alphabet, args.qz)
    else:
        qz = output_distribution(mac, *_inputs(mac, args))
    res = region_membership(mac, qz, *args.rates, SearchConfig(resolution=args.resolution))
    print(f"rates {args.rates}: {res.status}")
    extra = {"status": res.status}
    if res.witness is not None:
        w = res.witness
        print(f"  margin {res.margin:.6g}; |V| = {w.support}")
        print(f"  I(X;Z|V)={w.i_xz:.6f} I(Y;Z|V)={w.i_yz:.6f} I(X,Y;Z|V)={w.i_xyz:.6f}")
        extra.update(margin=res.margin, p_v=w.p_v.tolist(), qx_v=w.qx_v.tolist(), qy_v=w.qy_v.tolist())
    write_manifest(args, extra)
    return 0


def cmd_resolve(args) -> int:
    from .resolvability import concentration_experiment

    mac = _plain(load_channel(args.channel))
    qx, qy = _inputs(mac, args)
    reports = concentration_experiment(mac, qx, qy, *args.rates, args.n, args.trials,
                                       args.gamma, args.seed, args.construction)
    rows = []
    for rep in reports:
        for t, g in enumerate(rep.gaps):
            rows.append([rep.n, t, g, rep.realized_rates[0], rep.realized_rates[1],
                         rep.threshold, g > rep.threshold])
        print(f"n={rep.n}: median gap {rep.median:.6f}, exceedance {rep.exceedance:.3f}")
    if args.out:
        write_csv(Path(args.out), "gap = variational distance (probability); rates in nats",
                  ["n", "trial", "gap", "rate1", "rate2", "threshold", "exceeds"], rows)
    write_manifest(args, {"construction": reports[0].construction if reports else None})
    return 0


def cmd_second_order(args) -> int:
    from .resolvability import second_order_schedule

    mac = _plain(load_channel(args.channel))
    qx, qy = _inputs(mac, args)
    rows = []
    for n in args.n:
        s = second_order_schedule(mac, qx, qy, args.epsilon, args.c, args.d, n, args.corner)
        rows.append([n, args.corner, s.r1, s.r2, s.v1, s.v2, s.eps_tilde1, s.eps_tilde2, s.gap_threshold])
        print(f"n={n}: R1={s.r1:.6f} R2={s.r2:.6f} eps~=({s.eps_tilde1:.6f}, {s.eps_tilde2:.6f})")
    if args.out:
        write_csv(Path(args.out), "rates in nats; dispersions in nats^2; eps_tilde probabilities",
                  ["n", "corner", "rate1", "rate2", "v1", "v2", "eps_tilde1", "eps_tilde2",
                   "gap_threshold"], rows)
    write_manifest(args)
    return 0


def cmd_secrecy(args) -> int:
    from .wiretap import secrecy_experiment

    wmac = _plain(load_channel(args.channel), want_wiretap=True)
    qx, qy = _inputs(wmac.legit, args)
    runs = secrecy_experiment(wmac, qx, qy, *args.rates, args.n, args.trials,
                              args.epsilon, args.seed, args.gamma)
    rows = []
    for run in runs:
        for r in run.reports:
            rows.append([r.n, r.trial, r.ds_gap, r.target_gap, r.ss_advantage, r.decode_error,
                         r.error_half_width, r.bad_security, r.bad_decoding])
        print(f"n={run.n}: counts {run.counts}, median ds gap {run.median_ds_gap:.6f}, "
              f"bad fraction {run.bad_fraction:.3f}")
    if args.out:
        write_csv(Path(args.out), "distances and errors are probabilities",
                  ["n", "trial", "ds_gap", "target_gap", "ss_advantage", "decode_error",
                   "error_half_width", "bad_security", "bad_decoding"], rows)
    write_manifest(args, {"L1": runs[0].L1, "L2": runs[0].L2, "epsilon": runs[0].epsilon} if runs else None)
    return 0


def cmd_bounds_check(args) -> int:
    from .bounds import berry_esseen_check, hoeffding_check, janson_check

    results = []
    for k in range(1, 21):
        for p in (0.1, 0.5, 0.9):
            var = [([0.0, 1.0], [1 - p, p])] * k
            for d in (0.1, 0.5, 0.9):
                results.append(("hoeffding", k, p, d, hoeffding_check(var, k * p, d).passed))
    for chi in (1, 2, 4):
        base = [[0.5, 0.5]] * (8 // chi)
        variables = [(g, j, [0.0, 1.0]) for g in range(chi) for j in range(8 // chi)]
        for d in (0.5, 1.0, 2.0):
            results.append(("janson", chi, 0.5, d, janson_check(base, variables, d).passed))
    for n in (1, 2, 4, 8, 16, 32, 64):
        for base in (([-0.5, 0.5], [0.5, 0.5]), ([-1.0, 2.0], [2 / 3, 1 / 3])):
            results.append(("berry-esseen", n, 0, 0, berry_esseen_check(base, n).passed))
    failed = [r for r in results if not r[-1]]
    print(f"{len(results) - len(failed)}/{len(results)} oracle checks passed")
    for r in failed:
        print("FAILED", r)
    write_manifest(args, {"checks": len(results), "failed": len(failed)})
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="macres", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def channel_cmd(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--channel", required=True, help="channel JSON file or bundled fixture name")
        sp.add_argument("--qx", type=_floats, help="input distribution of X (default uniform)")
        sp.add_argument("--qy", type=_floats, help="input distribution of Y (default uniform)")
        sp.set_defaults(func=func)
        return sp

    channel_cmd("info", cmd_info, "mutual informations, corner points, dispersions")

    sp = channel_cmd("region", cmd_region, "rate-region membership certificate")
    sp.add_argument("--rates", type=_pair, required=True)
    sp.add_argument("--qz", type=_floats, help="target output distribution (default induced by qx, qy)")
    sp.add_argument("--resolution", type=int, default=64)

    sp = channel_cmd("resolve", cmd_resolve, "resolvability gap experiments")
    sp.add_argument("--rates", type=_pair, required=True)
    sp.add_argument("--n", type=_ints, required=True)
    sp.add_argument("--trials", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--gamma", type=float, default=0.05)
    sp.add_argument("--construction", choices=("auto", "iid", "time-sharing"), default="auto")
    sp.add_argument("--out")

    sp = channel_cmd("second-order", cmd_second_order, "second-order rate schedules")
    sp.add_argument("--epsilon", type=float, default=0.05)
    sp.add_argument("--c", type=float, default=2.0)
    sp.add_argument("--d", type=float, default=0.5)
    sp.add_argument("--n", type=_ints, default=[100, 1000, 10000])
    sp.add_argument("--corner", type=int, choices=(1, 2), default=1)
    sp.add_argument("--out")

    sp = channel_cmd("secrecy", cmd_secrecy, "wiretap secrecy experiments")
    sp.add_argument("--rates", type=_pair, required=True)
    sp.add_argument("--n", type=_ints, required=True)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--gamma", type=float, default=0.05)
    sp.add_argument("--out")

    sp = sub.add_parser("bounds-check", help="run the concentration-inequality oracle suite")
    sp.set_defaults(func=cmd_bounds_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MacresError, FileNotFoundError, ValueError) as e:
        print(f"macres: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
