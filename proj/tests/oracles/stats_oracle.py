"""Reference values for the statistics tests, computed with SciPy.

Run once and paste the printed values into tests/test_stats.cpp and the
acceptance suite. Nothing in the C++ build depends on this script.
"""
from scipy import special, stats

ANOVA_GROUPS = [
    [6, 8, 4, 5, 3, 4],
    [8, 12, 9, 11, 6, 8],
    [13, 9, 11, 8, 7, 12],
]
T_A = [19.7, 21.4, 20.9, 22.1, 18.8, 20.3, 21.0]
T_B = [22.5, 23.1, 21.8, 24.0, 22.9, 23.4]

# Per-persona normalized FindEvents frequencies for three sectors.
MIXED = [
    [0.50, 0.40, 0.60, 0.55],
    [0.20, 0.25, 0.10, 0.30],
    [0.45, 0.35, 0.50, 0.40],
]

BETA_POINTS = [(2.5, 3.5, 0.3), (0.5, 0.5, 0.2), (10.0, 3.0, 0.85), (1.5, 40.0, 0.02), (30.0, 30.0, 0.55)]


def main():
    f, p = stats.f_oneway(*ANOVA_GROUPS)
    print(f"anova textbook F={f:.17g} p={p:.17g}")
    t, p = stats.ttest_ind(T_A, T_B, equal_var=True)
    print(f"pooled t={t:.17g} p={p:.17g}")
    r = stats.ttest_ind(T_A, T_B, equal_var=False)
    print(f"welch t={r.statistic:.17g} p={r.pvalue:.17g}")
    f, p = stats.f_oneway(*MIXED)
    print(f"mixed F={f:.17g} p={p:.17g}")
    for a, b, x in BETA_POINTS:
        print(f"betainc({a},{b},{x})={special.betainc(a, b, x):.17g}")


if __name__ == "__main__":
    main()
