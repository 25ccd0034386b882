"""Weighting ensembles on a sparse layered DAG and the vertices whose central value is extreme."""

import numpy as np

from maglab.nn_outliers import ensemble, mlp_dag, normality_report, outlier_sets, sign_discordance_rate

D = mlp_dag((16, 16, 16, 16, 16), keep_prob=0.25, seed=0)
G = D.digraph
print(f"{len(G.vertices)} vertices, {len(G.arcs)} arcs")

ens = ensemble(D, 100, base_seed=0)
print("max residual:", max(ens.residuals))
sinks = [v for v in G.vertices if G.out_degree(v) == 0]
sources = [v for v in G.vertices if G.in_degree(v) == 0]
print("sinks all exactly 1:", all(np.all(ens.column(v) == 1.0) for v in sinks))
print("sources with spread:", sum(np.ptp(ens.column(v)) > 0 for v in sources), "of", len(sources))

rep = normality_report(ens)
print(f"normality at 1%: {rep['passed']}/{rep['tested']} components pass")

sets = outlier_sets(ens, D, "median", 0.14, 0.99)
print("low:", sorted(sets.t_minus))
print("high:", sorted(sets.t_plus))
print("sign discordance:", sign_discordance_rate(D, ens.tendency("median")))
