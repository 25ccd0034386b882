"""Control flow graphs of generated programs: how the statement value changes the weighting space."""

from maglab.program_cfg import analyze, assign_arc_data, build_cfg, generate_skeleton, perturbation_study

sk = generate_skeleton(seed=7, productions=20)
print(sk.text())
cfg = build_cfg(sk)
print(f"{len(cfg.vertices)} lines, {len(cfg.arcs)} control flow arcs")

for value in (1, 2):
    asg = assign_arc_data(cfg, sk, {j: value for j in sk.statement_lines})
    an = analyze(asg)
    sums = sorted({str(sum(v)) for v in an.space.kernel})
    print(f"statement value {value}: kernel dimension {len(an.space.kernel)}, kernel sums {sums}, magnitude {an.space.magnitude}")

# change one statement and compare the kernel row maxima line by line
base = assign_arc_data(cfg, sk, {j: 1 for j in sk.statement_lines})
j = sk.statement_lines[0]
rep = perturbation_study(base, j, 3)
for row in rep.rows()[:8]:
    print(row)
