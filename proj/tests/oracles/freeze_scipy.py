"""Writes scipy_frozen.hpp: fixtures plus scipy's statistics and p-values for them.
Rerun only when fixtures change; the header is committed."""
import numpy as np
from scipy import stats

rng = np.random.default_rng(20240611)


def num(v):
    return repr(float(v))


def arr(v):
    return "{" + ", ".join(repr(float(x)) for x in v) + "}"


fixtures = []
# correlated, anti-correlated, weak, tied integer scores, small n
x = rng.normal(size=30); fixtures.append(("correlated", x, 0.8 * x + rng.normal(scale=0.5, size=30)))
x = rng.normal(size=25); fixtures.append(("anti", x, -0.6 * x + rng.normal(scale=0.8, size=25)))
fixtures.append(("weak", rng.normal(size=40), rng.normal(size=40)))
fixtures.append(("ties", rng.integers(0, 5, size=20) * 25.0, rng.integers(0, 5, size=20) * 25.0))
fixtures.append(("small", np.array([1.0, 2.0, 4.0, 3.0, 7.0]), np.array([2.0, 1.0, 5.0, 6.0, 9.0])))

groups_sets = [
    [rng.normal(0, 1, 12), rng.normal(0, 2, 15)],
    [rng.normal(50, 10, 20), rng.normal(55, 10, 20), rng.normal(60, 25, 20)],
    [rng.integers(0, 101, 30).astype(float), rng.integers(20, 81, 30).astype(float)],
    [np.array([1.0, 2, 3, 4, 5]), np.array([2.0, 4, 6, 8, 10]), np.array([1.0, 1, 1, 2])],
    [rng.exponential(3, 40), rng.exponential(5, 35)],
]

out = ["// Generated by freeze_scipy.py (scipy " + __import__("scipy").__version__ + "). Do not edit.",
       "#pragma once", "", "#include <utility>", "#include <vector>", "", "namespace oracle::frozen {", "",
       "struct CorrFixture {", "  const char* name;", "  std::vector<double> x, y;",
       "  double pearson_r, pearson_p, spearman_rho, spearman_p;", "};", "",
       "struct GroupFixture {", "  std::vector<std::vector<double>> groups;",
       "  double levene_w, levene_p;", "  double welch_t, welch_p, welch_dof;  // first two groups", "};", "",
       "inline const std::vector<CorrFixture> correlations = {"]
for name, a, b in fixtures:
    pr = stats.pearsonr(a, b); sr = stats.spearmanr(a, b)
    out.append(f'    {{"{name}", {arr(a)},\n     {arr(b)},\n     {num(pr.statistic)}, {num(pr.pvalue)}, {num(sr.statistic)}, {num(sr.pvalue)}}},')
out.append("};")
out.append("")
out.append("inline const std::vector<GroupFixture> groups = {")
for g in groups_sets:
    lv = stats.levene(*g, center="mean")
    w = stats.ttest_ind(g[0], g[1], equal_var=False)
    v1, v2 = np.var(g[0], ddof=1) / len(g[0]), np.var(g[1], ddof=1) / len(g[1])
    dof = (v1 + v2) ** 2 / (v1 ** 2 / (len(g[0]) - 1) + v2 ** 2 / (len(g[1]) - 1))
    out.append("    {{" + ", ".join(arr(x) for x in g) + "},")
    out.append(f"     {num(lv.statistic)}, {num(lv.pvalue)}, {num(w.statistic)}, {num(w.pvalue)}, {num(dof)}}},")
out.append("};")
out.append("")
out.append("// Standard normal CDF at selected points.")
zs = [-3.0, -1.5, -0.25, 0.0, 0.5, 1.0, 1.96, 2.5]
out.append("inline const std::vector<std::pair<double, double>> normal_cdf = {")
out.append("    " + ", ".join(f"{{{num(z)}, {num(stats.norm.cdf(z))}}}" for z in zs) + "};")
out.append("")
out.append("}  // namespace oracle::frozen")
open("scipy_frozen.hpp", "w").write("\n".join(out) + "\n")
