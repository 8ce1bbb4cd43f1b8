"""Command-line entry point: solve, scan, curve, stationary, limits, certify, oracle.

Every run writes a JSON artifact embedding its configuration, a schema
version, and a content hash; grid scans additionally emit CSV (comma
delimited, '.' decimal, LF line endings, one comment line per column).
Exit codes: 0 success, 2 domain errors, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import graphon as gr
from . import oracle as oc
from . import scalar_phase as sp
from . import solver as sv
from . import subgraph as sg
from .errors import DomainError, EmptyWindowError, NonConvergenceError

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    command: str
    params: dict
    seed: int
    output_dir: str
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        return RunConfig(
            command=d["command"],
            params=dict(d["params"]),
            seed=int(d["seed"]),
            output_dir=d["output_dir"],
            schema_version=int(d.get("schema_version", SCHEMA_VERSION)),
        )


def _content_hash(payload: dict) -> str:
    clean = {k: v for k, v in payload.items() if k not in ("content_hash", "timestamp")}
    return hashlib.sha256(json.dumps(clean, sort_keys=True).encode()).hexdigest()


def _emit_json(cfg: RunConfig, result: dict) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "result": result,
    }
    payload["content_hash"] = _content_hash(payload)
    payload["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    os.makedirs(cfg.output_dir, exist_ok=True)
    name = cfg.command.replace(" ", "-") + "_" + payload["content_hash"][:12] + ".json"
    path = os.path.join(cfg.output_dir, name)
    with open(path, "w", newline="\n") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")
    return path


def _write_csv(path: str, columns: list[tuple[str, str]], rows) -> None:
    with open(path, "w", newline="\n") as f:
        for name, doc in columns:
            f.write(f"# {name}: {doc}\n")
        f.write(",".join(name for name, _ in columns) + "\n")
        for row in rows:
            f.write(",".join(str(x) for x in row) + "\n")


def _parse_range(text: str) -> np.ndarray:
    """'a:b:n' inclusive linspace."""
    try:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError as exc:
        raise DomainError(f"bad range {text!r}, expected a:b:n") from exc


def _read_config_file(path: str) -> dict:
    """Plain key = value lines; '#' starts a comment. Flags win on conflict."""
    out: dict = {}
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"bad config line {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            val = val.strip("\"'")
            for cast in (int, float):
                try:
                    out[key.replace("-", "_")] = cast(val)
                    break
                except ValueError:
                    continue
            else:
                out[key.replace("-", "_")] = val
    return out


def _graphon_dict(h: gr.BlockGraphon) -> dict:
    return {"c": h.fractions.tolist(), "h": h.values.tolist()}


def _solver_config(opts: dict) -> sv.SolverConfig:
    return sv.SolverConfig(
        max_blocks=int(opts.get("blocks", 4)),
        restarts=int(opts.get("restarts", 24)),
        seed=int(opts.get("seed", 0)),
        max_iters=int(opts.get("max_iters", 300)),
    )


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def _cmd_solve(opts: dict) -> tuple[dict, str, list | None]:
    H = sg.parse_subgraph(opts["subgraph"])
    eps, beta2 = float(opts["epsilon"]), float(opts["beta2"])
    res = sv.solve_canonical(H, eps, beta2, _solver_config(opts))
    result = {
        "classification": res.classification,
        "psi": res.psi,
        "certificate": res.certificate,
        "graphon": _graphon_dict(res.best),
        "diagnostics": {k: v for k, v in res.diagnostics.items()},
    }
    summary = (
        f"{res.classification} psi={res.psi:.9f} K={res.best.num_blocks}"
        + (f" ({res.certificate})" if res.certificate else "")
    )
    return result, summary, None


def _cmd_certify(opts: dict) -> tuple[dict, str, list | None]:
    H = sg.parse_subgraph(opts["subgraph"])
    eps, beta2 = float(opts["epsilon"]), float(opts["beta2"])
    cert = sv.certify(H, eps, beta2)
    if cert is None:
        return {"classification": "undecided", "certificate": None}, "undecided (no certificate applies)", None
    summary = f"{cert.classification}-certified ({cert.name})"
    return {"classification": f"{cert.classification}-certified", "certificate": cert.name}, summary, None


def _cmd_stationary(opts: dict) -> tuple[dict, str, list | None]:
    beta2 = float(opts["beta2"])
    pt = sv.stationary_graphon(beta2)
    report = sv.saddle_check(beta2)
    result = {
        "beta2": beta2,
        "delta": pt.delta,
        "lagrange_beta1": pt.lagrange_beta1,
        "graphon": _graphon_dict(pt.graphon),
        "el_residual": sv.stationary_el_residual(pt),
        "saddle_verdict": report.verdict,
        "second_variation": {
            "checkerboard": report.checkerboard_value,
            "localized": report.localized_value,
        },
    }
    return result, f"delta={pt.delta:.6f} {report.verdict}", None


def _cmd_limits(opts: dict) -> tuple[dict, str, list | None]:
    H = sg.parse_subgraph(opts["subgraph"])
    eps, beta2 = float(opts["epsilon"]), float(opts["beta2"])
    lo, hi = sv.limit_ratio(H, eps, beta2)
    return {"bracket": [lo, hi]}, f"psi/beta2 in [{lo:.6f}, {hi:.6f}]", None


def _cmd_curve(opts: dict) -> tuple[dict, str, list | None]:
    p = int(opts.get("p", 2))
    rows = []
    for b2 in _parse_range(opts["beta2_range"]):
        b1, x1, x2 = sp.curve_maximizers(float(b2), p)
        rows.append((float(b2), b1, x1, x2))
    columns = [
        ("beta2", "motif coupling (above its critical value)"),
        ("beta1_on_curve", "edge coupling with two equal maximizers"),
        ("x1", "lower maximizer"),
        ("x2", "upper maximizer"),
    ]
    result = {"p": p, "rows": [list(r) for r in rows]}
    return result, f"{len(rows)} curve points", [("curve.csv", columns, rows)]


def _scan_cell(task):
    h_json, eps, beta2, cfg = task
    H = sg.SubgraphSpec.from_json(h_json)
    res = sv.solve_canonical(H, eps, beta2, cfg)
    uniform_psi = gr.uniform_objective(eps, H, beta2)
    return {
        "epsilon": eps,
        "beta2": beta2,
        "psi": res.psi,
        "classification": res.classification,
        "certificate": res.certificate or "",
        "k_effective": res.best.num_blocks,
        "delta_over_uniform": res.psi - uniform_psi,
    }


def _is_nonuniform(H, eps, beta2, cfg) -> bool:
    cert = sv.certify(H, eps, beta2)
    if cert is not None:
        return cert.classification == "nonuniform"
    return sv.solve_canonical(H, eps, beta2, cfg).classification.startswith("nonuniform")


def _refine_transition(H, eps, b_lo, b_hi, cfg, tol=1e-3) -> float:
    while b_hi - b_lo > tol:
        mid = 0.5 * (b_lo + b_hi)
        if _is_nonuniform(H, eps, mid, cfg):
            b_hi = mid
        else:
            b_lo = mid
    return 0.5 * (b_lo + b_hi)


def _cmd_phase_scan(opts: dict) -> tuple[dict, str, list | None]:
    H = sg.parse_subgraph(opts["subgraph"])
    eps_grid = _parse_range(opts["eps_range"])
    b2_grid = _parse_range(opts["beta2_range"])
    cfg = sv.SolverConfig(
        max_blocks=int(opts.get("blocks", 3)),
        restarts=int(opts.get("restarts", 8)),
        seed=int(opts.get("seed", 0)),
        max_iters=int(opts.get("max_iters", 150)),
    )
    threads = int(opts.get("threads", os.environ.get("ERGM_THREADS", 1)))
    tasks = [
        (H.to_json(), float(e), float(b), cfg) for e in eps_grid for b in b2_grid
    ]
    if threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as ex:
            cells = list(ex.map(_scan_cell, tasks))
    else:
        cells = [_scan_cell(t) for t in tasks]

    transitions = []
    if int(opts.get("refine", 1)):
        nb = len(b2_grid)
        for i, e in enumerate(eps_grid):
            row = cells[i * nb : (i + 1) * nb]
            for a, b in zip(row[:-1], row[1:]):
                au = not a["classification"].startswith("nonuniform")
                bu = not b["classification"].startswith("nonuniform")
                if au and not bu:
                    t = _refine_transition(H, float(e), a["beta2"], b["beta2"], cfg)
                    transitions.append({"epsilon": float(e), "beta2_transition": t})

    columns = [
        ("epsilon", "edge density of the cell"),
        ("beta2", "motif coupling of the cell"),
        ("psi", "achieved constrained free energy"),
        ("classification", "uniform/nonuniform, certified/numerical"),
        ("certificate", "closed-form certificate applied, empty if none"),
        ("k_effective", "blocks in the canonicalized optimizer"),
        ("delta_over_uniform", "psi minus the flat-graphon value"),
    ]
    rows = [
        (
            c["epsilon"],
            c["beta2"],
            c["psi"],
            c["classification"],
            c["certificate"],
            c["k_effective"],
            c["delta_over_uniform"],
        )
        for c in cells
    ]
    result = {"cells": cells, "transitions": transitions}
    summary = f"{len(cells)} cells, {len(transitions)} transitions"
    return result, summary, [("phase_scan.csv", columns, rows)]


def _graph_entry(g: sg.AdjacencyGraph, prob: float) -> dict:
    return {"n": g.n, "bits": oc.graph_to_bits(g), "probability": prob}


def _cmd_oracle_enumerate(opts: dict) -> tuple[dict, str, list | None]:
    H = sg.parse_subgraph(opts["subgraph"])
    res = oc.enumerate_psi(
        int(opts["n"]),
        float(opts["epsilon"]),
        float(opts["delta"]),
        H,
        float(opts["beta2"]),
        top_k=int(opts.get("top", 5)),
    )
    result = {
        "psi": res.psi,
        "num_admitted": res.num_admitted,
        "top_graphs": [_graph_entry(g, p) for g, p in res.top_graphs],
    }
    return result, f"psi={res.psi:.9f} admitted={res.num_admitted}", None


def _cmd_oracle_mcmc(opts: dict) -> tuple[dict, str, list | None]:
    H = sg.parse_subgraph(opts["subgraph"])
    run = oc.mcmc_sample(
        int(opts["n"]),
        int(opts["edge_count"]),
        H,
        float(opts["beta2"]),
        int(opts["steps"]),
        int(opts["burn_in"]),
        int(opts.get("seed", 0)),
    )
    result = {
        "acceptance_rate": run.acceptance_rate,
        "mean_t": run.mean_t,
        "mean_t_se": run.mean_t_se,
        "degree_profile": run.degree_profile.tolist(),
        "frozen": run.frozen,
    }
    return result, f"mean_t={run.mean_t:.6f} (se {run.mean_t_se:.2e}) accept={run.acceptance_rate:.3f}", None


_COMMANDS = {
    "solve": _cmd_solve,
    "certify": _cmd_certify,
    "stationary": _cmd_stationary,
    "limits": _cmd_limits,
    "curve": _cmd_curve,
    "phase-scan": _cmd_phase_scan,
    "oracle enumerate": _cmd_oracle_enumerate,
    "oracle mcmc": _cmd_oracle_mcmc,
}

_FLAGS: dict[str, list[tuple[str, bool]]] = {
    "solve": [
        ("subgraph", True),
        ("epsilon", True),
        ("beta2", True),
        ("blocks", False),
        ("restarts", False),
        ("seed", False),
        ("max-iters", False),
        ("json-out", False),
    ],
    "certify": [("subgraph", True), ("epsilon", True), ("beta2", True)],
    "stationary": [("beta2", True)],
    "limits": [("subgraph", True), ("epsilon", True), ("beta2", True)],
    "curve": [("p", False), ("beta2-range", True)],
    "phase-scan": [
        ("subgraph", True),
        ("eps-range", True),
        ("beta2-range", True),
        ("blocks", False),
        ("restarts", False),
        ("seed", False),
        ("max-iters", False),
        ("threads", False),
        ("refine", False),
    ],
    "oracle enumerate": [
        ("n", True),
        ("epsilon", True),
        ("delta", True),
        ("subgraph", True),
        ("beta2", True),
        ("top", False),
    ],
    "oracle mcmc": [
        ("n", True),
        ("edge-count", True),
        ("subgraph", True),
        ("beta2", True),
        ("steps", True),
        ("burn-in", True),
        ("seed", False),
    ],
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cergm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    groups: dict = {}
    for cmd, flags in _FLAGS.items():
        parts = cmd.split(" ")
        if len(parts) == 1:
            p = sub.add_parser(parts[0])
        else:
            # nested group: 'oracle enumerate' / 'oracle mcmc'
            if parts[0] not in groups:
                gp = sub.add_parser(parts[0])
                groups[parts[0]] = gp.add_subparsers(dest="subcommand", required=True)
            p = groups[parts[0]].add_parser(parts[1])
        for flag, _required in flags:
            p.add_argument(f"--{flag}", default=None)
        p.add_argument("--config", default=None)
        p.add_argument("--output-dir", default=None)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    command = args.command
    if getattr(args, "subcommand", None):
        command = f"{args.command} {args.subcommand}"

    opts: dict = {}
    if args.config:
        opts.update(_read_config_file(args.config))
    for key, val in vars(args).items():
        if key in ("command", "subcommand", "config") or val is None:
            continue
        opts[key.replace("-", "_")] = val
    missing = [
        flag for flag, required in _FLAGS[command] if required and flag.replace("-", "_") not in opts
    ]
    if missing:
        print(f"error: missing required flags for {command}: {', '.join(missing)}", file=sys.stderr)
        return 2

    output_dir = str(opts.pop("output_dir", "runs"))
    cfg = RunConfig(
        command=command,
        params={k: v for k, v in sorted(opts.items()) if k != "json_out"},
        seed=int(opts.get("seed", 0)),
        output_dir=output_dir,
    )
    try:
        result, summary, csvs = _COMMANDS[command](opts)
    except (DomainError, EmptyWindowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 3

    path = _emit_json(cfg, result)
    if opts.get("json_out"):
        with open(path) as f:
            data = f.read()
        with open(str(opts["json_out"]), "w", newline="\n") as f:
            f.write(data)
    if csvs:
        for name, columns, rows in csvs:
            _write_csv(os.path.join(cfg.output_dir, name), columns, rows)
    print(f"{summary} -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
