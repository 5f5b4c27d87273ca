"""Watch the neighbourhood refinement inside a narrow corridor.

Each line shows how many invalid neighbours the search region held after
the initial ball and after each force-guided reshaping.
"""

from fdit.scenarios import corridor_trial, non_increasing

for seed in range(10):
    t = corridor_trial(seed)
    phi = " ".join(f"{p:.2f}" for p in t.ratio_history)
    flag = "" if non_increasing(t.invalid_history) else "  (rose)"
    print(f"seed {seed}: invalid {t.invalid_history}  ratio [{phi}]{flag}")
