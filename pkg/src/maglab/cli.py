"""``magctl``: run the enrichment and magnitude pipelines from the command line.

Every run writes its outputs plus ``manifest.json`` (argv, parameters,
seed, library version, SHA-256 of each output) into ``--out-dir``.
Exit status: 0 on success, 2 on invalid input, 3 on numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, io
from .channels import (
    Channel,
    ChannelError,
    ConvergenceError,
    MurogaError,
    bsc_for_capacity,
    capacity_blahut_arimoto,
    capacity_muroga,
    channel_network,
    kron_channels,
    muroga_coweighting_check,
)
from .cocycle import (
    CocycleError,
    build_incidence,
    cycle_unity_report,
    extract_potentials,
    kernel_basis,
    positive_integer_assignment,
    tree_assignment,
    verify_cocycle,
)
from .digraph import (
    DigraphError,
    nondegenerate_paths,
    spanning_structure,
    strong_components,
    structure_from_edges,
    transitive_closure,
)
from .magnitude import MagnitudeError, SizeMap, similarity_matrix, weighting_space
from .matrix_cat import (
    CompositionError,
    KroneckerDivisionError,
    as_exact_matrix,
    det_size,
    dim_cocycle_solve,
    extract_matrix_potentials,
    kronecker_assemble,
    matmul_tree_assignment,
    reach_set,
    unitriangular,
    verify_matmul,
)
from .nn_outliers import (
    DEFAULT_KEEP_PROB,
    ensemble,
    mlp_dag,
    normality_report,
    outlier_sets,
    polytree_dag,
    sign_discordance_rate,
)
from .program_cfg import Skeleton, analyze, assign_arc_data, build_cfg, generate_skeleton, perturbation_study

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE = 0, 2, 3
INPUT_ERRORS = (
    ValueError,
    KeyError,
    OSError,
    DigraphError,
    CocycleError,
    ChannelError,
    KroneckerDivisionError,
    CompositionError,
    ZeroDivisionError,
)


class Outputs:
    """Collects the files a command writes, in creation order."""

    def __init__(self, out_dir: Path, formats: set):
        self.dir = out_dir
        self.formats = formats
        self.files: list[Path] = []
        self.notes: list[str] = []

    def _add(self, path) -> None:
        if path is not None:
            self.files.append(Path(path))

    def json(self, name: str, data) -> None:
        self._add(io.write_json(self.dir / name, data))

    def text(self, name: str, text: str) -> None:
        self._add(io.write_text(self.dir / name, text))

    def csv(self, name: str, A) -> None:
        if "csv" in self.formats:
            self._add(io.write_text(self.dir / name, io.matrix_csv_text(A)))

    def csv_text(self, name: str, text: str) -> None:
        if "csv" in self.formats:
            self._add(io.write_text(self.dir / name, text))

    def dot(self, name: str, text: str) -> None:
        if "dot" in self.formats:
            self._add(io.write_text(self.dir / name, text))

    def svg(self, name: str, draw, *args, **kw) -> None:
        if "svg" in self.formats:
            path = draw(*args, self.dir / name, **kw)
            if path is None:
                self.notes.append(f"{name} omitted: nothing to draw")
            self._add(path)


def _plots():
    from . import plots

    return plots


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _vec(v):
    return None if v is None else [io.scalar_out(x) for x in v]


def _edge_list(S) -> list:
    return [[str(a), str(b)] for a, b in S.tree_edges]


# commands ---------------------------------------------------------------


def cmd_closure(args, out: Outputs) -> dict:
    D = io.read_digraph(args.graph)
    C = transitive_closure(D)
    SC = strong_components(D)
    data = {
        "vertices": [str(v) for v in D.vertices],
        "arcs": D.to_dict()["arcs"],
        "closure_arcs": [[str(j), str(k)] for j, k in C.nonloop_arcs],
        "nondegenerate_paths": len(nondegenerate_paths(C)),
        "strong_components": [[str(v) for v in comp] for comp in SC.components],
        "is_dag": SC.is_dag,
        "reach_set": sorted([str(j), str(k)] for j, k in reach_set(D)),
    }
    out.json("closure.json", data)
    out.csv("support.csv", C.support().astype(int))
    closure_graph = type(D)(D.vertices, C.nonloop_arcs)
    out.dot("digraph.dot", D.to_dot("D"))
    out.dot("closure.dot", closure_graph.to_dot("closure"))
    out.svg("closure.svg", _plots().draw_digraph, closure_graph, title="transitive closure")
    return {"closure_arcs": len(C.nonloop_arcs), "is_dag": SC.is_dag}


def _random_rationals(rng, n: int) -> list[Fraction]:
    num = rng.integers(1, 10, size=n)
    den = rng.integers(1, 10, size=n)
    return [Fraction(int(a), int(b)) for a, b in zip(num, den)]


def cmd_cocycle(args, out: Outputs) -> dict:
    D = io.read_digraph(args.graph)
    C = transitive_closure(D)
    if args.weights:
        raw = io.arc_values_from_json(io.read_json(args.weights), D)
        W = {a: io.scalar_in(v) for a, v in raw.items()}
        S = structure_from_edges(D, list(W))
    else:
        S = spanning_structure(D, args.seed)
        W = dict(zip(S.tree_edges, _random_rationals(np.random.default_rng(args.seed), len(S.tree_edges))))
    E = tree_assignment(C, S, W)
    bad = verify_cocycle(E)
    P = extract_potentials(E)
    report = cycle_unity_report(E)
    out.json("tree.json", {"edges": _edge_list(S), "weights": io.arc_values_to_json(W)["arcs"]})
    out.json("enrichment.json", E.to_dict())
    out.json("potentials.json", {str(v): io.scalar_out(x) for v, x in P.p.items()})
    Z = similarity_matrix(E)
    out.csv("Z.csv", Z.Z)
    summary = {
        "violations": [list(map(str, t)) for t in bad],
        "cycle_products": [{"cycle": [str(v) for v in c], "product": io.scalar_out(x)} for c, x in report.cycles],
        "cycle_arcs_not_one": [[str(j), str(k)] for j, k in report.offending_arcs],
        "closure_arcs": len(C.nonloop_arcs),
    }
    if args.kernel:
        M = build_incidence(C)
        B = kernel_basis(M)
        out.json(
            "kernel.json",
            {
                "columns": [[str(j), str(k)] for j, k in B.cols],
                "incidence": [list(r) for r in M.matrix],
                "basis": [list(v) for v in B.vectors],
            },
        )
        summary["kernel_dimension"] = B.dimension
    out.json("summary.json", summary)
    out.svg("Z_log2.svg", _plots().log2_heatmap, Z.Z, labels=Z.labels)
    return summary


def _read_matrix(path) -> np.ndarray:
    if str(path).endswith(".json"):
        return io.matrix_from_json(io.read_json(path))
    return io.read_matrix_csv(path)


def cmd_weighting(args, out: Outputs) -> dict:
    Z = _read_matrix(args.z)
    if Z.shape[0] != Z.shape[1]:
        raise ValueError("similarity matrix must be square")
    space = weighting_space(Z)
    out.json("weighting.json", space.to_dict())
    out.svg("Z_log2.svg", _plots().log2_heatmap, Z)
    out.svg("kernel.svg", _plots().kernel_heatmap, space.kernel_matrix())
    return {"magnitude": io.scalar_out(space.magnitude) if space.magnitude is not None else None}


def _program_outputs(an, out: Outputs, prefix: str = "") -> dict:
    asg = an.assignment
    sp = an.space
    kernel_sums = [io.scalar_out(sum(v)) for v in sp.kernel]
    data = {
        "cocycle_violations": [list(t) for t in verify_cocycle(asg.enrichment)],
        "arc_data": [{"src": a, "dst": b, "value": io.scalar_out(v)} for (a, b), v in asg.data.items()],
        "delta": {str(k): io.scalar_out(v) for k, v in asg.delta.items()},
        "weighting_space": sp.to_dict(),
        "kernel_sums": kernel_sums,
        "kernel_row_maxima": an.kernel_row_maxima.tolist(),
    }
    out.json(f"{prefix}analysis.json", data)
    out.csv(f"{prefix}Z.csv", an.Z)
    out.svg(f"{prefix}Z_log2.svg", _plots().log2_heatmap, an.Z, title="log2 Z")
    out.svg(f"{prefix}kernel.svg", _plots().kernel_heatmap, sp.kernel_matrix())
    return data


def _program_run(sk: Skeleton, args, out: Outputs) -> dict:
    cfg = build_cfg(sk)
    delta = _parse_delta(args.delta, sk)
    asg = assign_arc_data(cfg, sk, delta)
    out.text("skeleton.txt", sk.text())
    out.json("cfg.json", cfg.to_dict())
    out.dot("cfg.dot", cfg.to_dot("cfg", {v: f"{v}: {sk.lines[v]}" for v in cfg.vertices}))
    an = analyze(asg)
    data = _program_outputs(an, out)
    summary = {
        "lines": len(sk.lines),
        "magnitude": data["weighting_space"]["magnitude"],
        "kernel_dimension": len(an.space.kernel),
        "cocycle_ok": not data["cocycle_violations"],
    }
    if args.perturb is not None:
        rep = perturbation_study(asg, args.perturb, Fraction(args.new_delta))
        out.json("perturbation.json", rep.to_dict())
        series = {"base": rep.base.kernel_row_maxima, "perturbed": rep.perturbed.kernel_row_maxima}
        out.svg("row_maxima.svg", _plots().row_maxima_plot, series)
        summary["perturbed_magnitude"] = rep.to_dict()["magnitude_perturbed"]
    return summary


def _parse_delta(items, sk: Skeleton) -> dict | None:
    """``v`` sets every statement line; ``j=v`` sets line j (later items win)."""
    if not items:
        return None
    delta = {}
    for item in items:
        line, eq, val = item.partition("=")
        if not eq:
            delta.update({j: Fraction(line) for j in sk.statement_lines})
            continue
        j = int(line)
        if j not in sk.statement_lines:
            raise ValueError(f"line {j} is not a statement line")
        delta[j] = Fraction(val)
    return delta


def cmd_program_gen(args, out: Outputs) -> dict:
    return _program_run(generate_skeleton(args.seed, args.productions), args, out)


def _read_skeleton(path) -> Skeleton:
    toks = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        toks.append(rest.strip() if head.isdigit() else line)
    return Skeleton.from_lines(toks)


def cmd_program_analyze(args, out: Outputs) -> dict:
    return _program_run(_read_skeleton(args.skeleton), args, out)


def cmd_mlp(args, out: Outputs) -> dict:
    D = mlp_dag(args.widths, args.keep_prob, args.seed)
    ens = ensemble(D, args.n, base_seed=args.seed, workers=args.threads)
    G = D.digraph
    out.json("dag.json", {**G.to_dict(), "weights": io.arc_values_to_json(D.weights)["arcs"]})
    header = [str(v) for v in ens.vertices]
    out.csv_text("samples.csv", io.table_csv_text(["seed", *header], [[s, *row] for s, row in zip(ens.seeds, ens.samples)]))
    rep = normality_report(ens)
    summ = ens.summary()
    sinks = [v for v in G.vertices if G.out_degree(v) == 0]
    sources = [v for v in G.vertices if G.in_degree(v) == 0]
    constant = [str(v) for j, v in enumerate(ens.vertices) if np.ptp(ens.samples[:, j]) == 0]
    sets = outlier_sets(ens, D, args.tendency, args.t_minus, args.t_plus)
    data = {
        "widths": list(args.widths),
        "keep_prob": args.keep_prob,
        "realizations": len(ens.seeds),
        "failed_seeds": list(ens.failed),
        "max_residual": max(ens.residuals, default=None),
        "sinks_exactly_one": bool(all(np.all(ens.column(v) == 1.0) for v in sinks)),
        "sources_constant": bool(all(np.ptp(ens.column(v)) == 0 for v in sources)),
        "constant_components": constant,
        "ad_tested": rep["tested"],
        "ad_passed_1pct": int(rep["passed"]),
        "ad_pass_rate_1pct": rep["pass_rate"],
        "ad_statistics": {str(v): r.adjusted for v, r in rep["results"].items()},
        "mean": dict(zip(header, summ["mean"].tolist())),
        "median": dict(zip(header, summ["median"].tolist())),
        "std": dict(zip(header, summ["std"].tolist())),
        "outliers": {
            "low": sorted(map(str, sets.t_minus)),
            "high": sorted(map(str, sets.t_plus)),
            "induced_vertices": [str(v) for v in sets.induced.vertices],
        },
        "sign_discordance": sign_discordance_rate(D, ens.tendency(args.tendency)),
    }
    out.json("summary.json", data)
    out.dot("dag.dot", G.to_dot("mlp"))
    out.dot("outliers.dot", sets.induced.to_dot("outliers", {v: f"{v}: {sets.values[v]:.3g}" for v in sets.induced.vertices}))
    out.svg("weighting_hist.svg", _plots().weighting_histogram, ens.samples)
    out.svg("outliers.svg", _plots().draw_digraph, sets.induced, values=sets.values, title="outlier subgraph")
    return {k: data[k] for k in ("realizations", "max_residual", "sinks_exactly_one", "sources_constant", "ad_pass_rate_1pct")}


def cmd_polytree(args, out: Outputs) -> dict:
    D = polytree_dag(args.n, args.seed)
    G = D.digraph
    C = transitive_closure(G)
    S = structure_from_edges(G, list(G.arcs))
    W = {a: Fraction(int(v)) for a, v in D.weights.items()}
    E = positive_integer_assignment(C, S, W)
    Z = similarity_matrix(E)
    space = weighting_space(Z)
    out.json("polytree.json", {**G.to_dict(), "weights": io.arc_values_to_json(W)["arcs"]})
    out.json("enrichment.json", E.to_dict())
    out.json("weighting.json", space.to_dict())
    out.csv("Z.csv", Z.Z)
    out.dot("polytree.dot", G.to_dot("polytree"))
    out.svg("Z_log2.svg", _plots().log2_heatmap, Z.Z)
    return {"vertices": len(G.vertices), "magnitude": space.to_dict()["magnitude"]}


SL2_GENERATORS = ([[1, 1], [0, 1]], [[1, 0], [1, 1]], [[2, 1], [1, 1]], [[0, -1], [1, 0]])


def _read_matrix_map(path, D) -> dict:
    data = io.read_json(path)
    lookup = {str(v): v for v in D.vertices}
    out = {}
    try:
        for rec in data["arcs"]:
            out[(lookup[str(rec["src"])], lookup[str(rec["dst"])])] = io.matrix_from_json(rec["matrix"])
    except (KeyError, TypeError) as exc:
        raise io.FormatError(f"malformed matrix bundle: {exc}") from exc
    return out


def _write_matrix_map(homs: dict) -> dict:
    return {"arcs": [{"src": str(j), "dst": str(k), "matrix": io.matrix_to_json(H)} for (j, k), H in homs.items()]}


def cmd_matcat(args, out: Outputs) -> dict:
    D = io.read_digraph(args.graph)
    C = transitive_closure(D)
    rng = np.random.default_rng(args.seed)
    if args.gens:
        W = {a: as_exact_matrix(M) for a, M in _read_matrix_map(args.gens, D).items()}
        S = structure_from_edges(D, list(W))
    else:
        S = spanning_structure(D, args.seed)
        if args.kind == "unitriangular":
            W = {e: unitriangular(int(x)) for e, x in zip(S.tree_edges, rng.integers(-9, 10, len(S.tree_edges)))}
        else:
            W = {}
            for e in S.tree_edges:
                M = as_exact_matrix([[1, 0], [0, 1]])
                for i in rng.integers(0, len(SL2_GENERATORS), 3):
                    M = M.dot(as_exact_matrix(SL2_GENERATORS[i]))
                W[e] = M
    E = matmul_tree_assignment(C, S, W)
    p = extract_matrix_potentials(E)
    Z = det_size(E)
    bad = verify_matmul(E)
    out.json("generators.json", _write_matrix_map({e: W[e] for e in S.tree_edges}))
    out.json("homs.json", _write_matrix_map(E.homs))
    out.json("potentials.json", {str(v): io.matrix_to_json(M) for v, M in p.items()})
    out.csv("Z_det.csv", Z.Z)
    det_ok = not verify_cocycle(Z.as_enrichment(C))
    out.json("summary.json", {"violations": [list(map(str, t)) for t in bad], "det_cocycle_ok": det_ok})
    return {"violations": len(bad), "det_cocycle_ok": det_ok}


def cmd_kron_dims(args, out: Outputs) -> dict:
    D = io.read_digraph(args.graph)
    raw = io.arc_values_from_json(io.read_json(args.tree_dims), D)
    dims = {a: int(v) for a, v in raw.items()}
    codims = None
    if args.tree_codims:
        codims = {a: int(v) for a, v in io.arc_values_from_json(io.read_json(args.tree_codims), D).items()}
    dc = dim_cocycle_solve(D, dims, codims, enforce_reach_set=not args.exact_only)
    data = {
        "s": io.arc_values_to_json(dc.s)["arcs"],
        "t": io.arc_values_to_json(dc.t)["arcs"],
    }
    out.json("dims.json", data)
    return {"feasible": True, "arcs": len(dc.s)}


def cmd_kron_assemble(args, out: Outputs) -> dict:
    D = io.read_digraph(args.graph)
    gens = {a: np.asarray(M, dtype=float) for a, M in _read_matrix_map(args.gens, D).items()}
    E = kronecker_assemble(D, list(gens), gens, rtol=args.tol)
    p = math.inf if args.p == "inf" else int(args.p)
    Z = similarity_matrix(E, SizeMap.schatten(p))
    space = weighting_space(Z)
    out.json("homs.json", _write_matrix_map(E.homs))
    out.json(
        "dims.json",
        {"s": io.arc_values_to_json(E.dims.s)["arcs"], "t": io.arc_values_to_json(E.dims.t)["arcs"]},
    )
    out.csv("Z_schatten.csv", Z.Z)
    out.json("weighting.json", space.to_dict())
    dev = E.max_deviation()
    out.json("summary.json", {"max_relative_deviation": dev, "p": args.p})
    return {"max_relative_deviation": dev, "magnitude": space.to_dict()["magnitude"]}


def load_network_spec(path, capacities=None):
    """Digraph and arc channels from a network document.

    Arcs carry either ``"channel"`` (a channel document) or ``"factors"``
    (indices into the top-level ``"factors"`` channels, or into
    ``capacities`` when given, each realized as a binary symmetric channel).
    """
    data = io.read_json(path)
    try:
        recs = data["arcs"]
        verts = [str(v) for v in data.get("vertices", [])] or list(
            dict.fromkeys(str(v) for r in recs for v in (r["src"], r["dst"]))
        )
        factors = {}
        if capacities is not None:
            factors = {i + 1: bsc_for_capacity(c) for i, c in enumerate(capacities)}
        elif "factors" in data:
            factors = {int(k): Channel.from_dict(v) for k, v in data["factors"].items()}
        chans = {}
        for r in recs:
            arc = (str(r["src"]), str(r["dst"]))
            if "channel" in r:
                chans[arc] = Channel.from_dict(r["channel"])
            else:
                chans[arc] = kron_channels([factors[int(i)] for i in r["factors"]])
    except (KeyError, TypeError) as exc:
        raise io.FormatError(f"malformed network spec: {exc}") from exc
    from .digraph import Digraph

    return Digraph(verts, list(chans)), chans


def cmd_channels_network(args, out: Outputs) -> dict:
    spec = args.spec or str(resources.files("maglab") / "data" / "six_vertex.json")
    D, chans = load_network_spec(spec, args.capacities)
    N = channel_network(D, chans)
    space = weighting_space(N.sizes.Z)
    out.csv("Z.csv", N.sizes.Z)
    out.json("weighting.json", space.to_dict())
    out.json("network.json", {**D.to_dict(), "homs": _write_matrix_map(N.enrichment.homs)["arcs"]})
    out.svg("Z_log2.svg", _plots().log2_heatmap, N.sizes.Z, labels=N.sizes.labels)
    return {"weighting": _vec(space.particular), "magnitude": io.scalar_out(space.magnitude) if space.magnitude is not None else None}


def _read_channel(path) -> Channel:
    return Channel.from_dict(io.read_json(path))


def cmd_channels_capacity(args, out: Outputs) -> dict:
    ch = _read_channel(args.channel)
    res = capacity_blahut_arimoto(ch, tol=args.tol, max_iter=args.max_iter)
    data = {
        "capacity_nats": res.capacity,
        "capacity_bits": res.bits,
        "input_dist": res.input_dist.tolist(),
        "iterations": res.iterations,
        "method": res.method,
    }
    out.json("capacity.json", data)
    return {"capacity_nats": res.capacity}


def cmd_muroga(args, out: Outputs) -> dict:
    ch = _read_channel(args.channel)
    ba = capacity_blahut_arimoto(ch, tol=args.tol)
    data = {"blahut_arimoto": {"capacity_nats": ba.capacity, "input_dist": ba.input_dist.tolist()}}
    try:
        mu = capacity_muroga(ch)
        rep = muroga_coweighting_check(ch)
        data["muroga"] = {
            "valid": True,
            "capacity_nats": mu.capacity,
            "input_dist": mu.input_dist.tolist(),
            "coweighting_residual": rep.residual,
            "diagonal_negative": rep.diagonal_negative,
            "pseudo_distance": rep.pseudo_distance.tolist(),
        }
        out.csv("Z_muroga.csv", rep.Z)
    except MurogaError as exc:
        data["muroga"] = {"valid": False, "reason": str(exc)}
    out.json("muroga.json", data)
    return {"capacity_nats": ba.capacity, "muroga_valid": data["muroga"]["valid"]}


def cmd_replay(args, out: Outputs) -> int:
    man = io.read_json(args.manifest)
    argv = list(man["argv"])
    target = Path(args.out_dir)
    if "--out-dir" in argv:
        argv[argv.index("--out-dir") + 1] = str(target)
    else:
        argv += ["--out-dir", str(target)]
    code = main(argv)
    if code != EXIT_OK:
        return code
    mismatched = []
    for name, digest in man["outputs"].items():
        if not name.endswith((".json", ".csv", ".txt", ".dot")):
            continue
        path = target / name
        if not path.exists() or io.sha256(path) != digest:
            mismatched.append(name)
    print(json.dumps({"replayed": man["command"], "mismatched": mismatched}))
    return EXIT_OK if not mismatched else 1


# parser -----------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="single source of randomness")
    p.add_argument("--out-dir", default="magctl_out", help="directory for outputs and manifest")
    p.add_argument(
        "--format",
        default="json,csv",
        help="comma-separated extra outputs among json,csv,dot,svg (json is always written)",
    )
    p.add_argument("--tol", type=float, default=None, help="numerical tolerance where a command uses one")
    p.add_argument("--config", default=None, help="JSON file of parameter defaults (flags take precedence)")


TOL_DEFAULTS = {"channels capacity": 1e-9, "muroga": 1e-9, "kron assemble": 1e-10}


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="magctl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    leaves: dict = {}

    def leaf(parent, name, func, help_):
        p = parent.add_parser(name, help=help_)
        _common(p)
        p.set_defaults(func=func)
        leaves[p.prog.split(" ", 1)[1]] = p
        return p

    p = leaf(sub, "closure", cmd_closure, "transitive closure, strong components, reach set")
    p.add_argument("--graph", required=True)

    p = leaf(sub, "cocycle", cmd_cocycle, "tree assignment, potentials and checks for scalar data")
    p.add_argument("--graph", required=True)
    p.add_argument("--weights", help="tree-edge values; the edges must form a spanning forest")
    p.add_argument("--kernel", action="store_true", help="also write the path incidence kernel basis")

    p = leaf(sub, "weighting", cmd_weighting, "weighting, kernel, coweighting and magnitude of a matrix")
    p.add_argument("--z", required=True, help="CSV (rationals as p/q stay exact) or matrix JSON")

    prog = sub.add_parser("program", help="grammar-generated programs and their control flow graphs")
    psub = prog.add_subparsers(dest="action", required=True)
    for name, func in (("gen", cmd_program_gen), ("analyze", cmd_program_analyze)):
        p = leaf(psub, name, func, f"{name} a program")
        if name == "gen":
            p.add_argument("--productions", type=int, default=20)
        else:
            p.add_argument("--skeleton", required=True)
        p.add_argument("--delta", nargs="+", default=None, help="v for every statement, or j=v per line (default 2)")
        p.add_argument("--perturb", type=int, default=None, help="statement line to perturb")
        p.add_argument("--new-delta", default="3")

    p = leaf(sub, "mlp", cmd_mlp, "weighting ensemble on a sparse layered DAG")
    p.add_argument("--widths", type=_ints, default=[16] * 5)
    p.add_argument("--keep-prob", type=float, default=DEFAULT_KEEP_PROB)
    p.add_argument("--n", type=int, default=100, help="number of realizations")
    p.add_argument("--threads", type=int, default=None, help="defaults to MAGLAB_THREADS or 1")
    p.add_argument("--tendency", choices=("mean", "median"), default="median")
    p.add_argument("--t-minus", type=float, default=0.14)
    p.add_argument("--t-plus", type=float, default=0.99)

    p = leaf(sub, "polytree", cmd_polytree, "random binary polytree with integer arc data")
    p.add_argument("--n", type=int, default=20)

    p = leaf(sub, "matcat", cmd_matcat, "matrix-multiplication hom-objects and determinant sizes")
    p.add_argument("--graph", required=True)
    p.add_argument("--gens", help="matrix bundle on spanning forest arcs")
    p.add_argument("--kind", choices=("unitriangular", "sl2"), default="sl2")

    kron = sub.add_parser("kron", help="Kronecker-product hom-objects")
    ksub = kron.add_subparsers(dest="action", required=True)
    p = leaf(ksub, "dims", cmd_kron_dims, "extend tree dimensions to a dimension cocycle")
    p.add_argument("--graph", required=True)
    p.add_argument("--tree-dims", required=True)
    p.add_argument("--tree-codims")
    p.add_argument("--exact-only", action="store_true", help="check integrality only")
    p = leaf(ksub, "assemble", cmd_kron_assemble, "assemble hom-objects from polytree generators")
    p.add_argument("--graph", required=True)
    p.add_argument("--gens", required=True)
    p.add_argument("--p", choices=("1", "2", "inf"), default="2", help="Schatten norm for sizes")

    ch = sub.add_parser("channels", help="channel capacities and channel networks")
    csub = ch.add_subparsers(dest="action", required=True)
    p = leaf(csub, "network", cmd_channels_network, "similarity matrix and weighting of a channel network")
    p.add_argument("--spec", help="network document (default: the six-vertex example)")
    p.add_argument("--capacities", type=_floats, default=None, help="c_1,...,c_m as exp-capacities")
    p = leaf(csub, "capacity", cmd_channels_capacity, "Blahut-Arimoto capacity")
    p.add_argument("--channel", required=True)
    p.add_argument("--max-iter", type=int, default=100_000)

    p = leaf(sub, "muroga", cmd_muroga, "closed-form capacity and coweighting check")
    p.add_argument("--channel", required=True)

    p = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_replay)
    return parser, leaves


def _leaf_key(args) -> str:
    action = getattr(args, "action", None)
    return f"{args.command} {action}" if action else args.command


def _parse(argv) -> argparse.Namespace:
    parser, leaves = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = io.read_json(args.config)
        if not isinstance(cfg, dict):
            raise io.FormatError("config file must hold a JSON object")
        leaves[_leaf_key(args)].set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    if getattr(args, "tol", "unset") is None:
        args.tol = TOL_DEFAULTS.get(_leaf_key(args), 1e-9)
    return args


def _manifest(args, argv, files: list[Path], out_dir: Path) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    return {
        "command": _leaf_key(args),
        "argv": list(argv),
        "parameters": json.loads(json.dumps(params, default=str)),
        "seed": args.seed,
        "version": __version__,
        "outputs": {str(p.relative_to(out_dir)): io.sha256(p) for p in files},
    }


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    except INPUT_ERRORS as exc:
        print(f"magctl: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.func is cmd_replay:
        return cmd_replay(args, None)
    out_dir = Path(args.out_dir)
    formats = {f.strip() for f in str(args.format).split(",") if f.strip()}
    unknown = formats - {"json", "csv", "dot", "svg"}
    if unknown:
        print(f"magctl: unknown format(s) {sorted(unknown)}", file=sys.stderr)
        return EXIT_INVALID
    out = Outputs(out_dir, formats)
    try:
        summary = args.func(args, out)
    except (ConvergenceError, MagnitudeError) as exc:
        print(f"magctl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except INPUT_ERRORS as exc:
        print(f"magctl: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    io.write_json(out_dir / "manifest.json", _manifest(args, argv, out.files, out_dir))
    if out.notes:
        summary = {**summary, "notes": out.notes}
    print(json.dumps(summary, default=str, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
