"""Regenerate src/emotrans/data/class_matrices.json (illustrative generator matrices).

Row j for an active state: ``p_noact`` at no-act, ``persistence`` extra mass on j,
and the remainder spread by the class emotion profile. The no-act row keeps
``p_stay`` on itself and spreads the rest by the same profile.
"""
import json
from pathlib import Path

import numpy as np

STATES = ["N", "S", "J", "JS", "F", "FS", "FJ", "FJS",
          "A", "AS", "AJ", "AJS", "AF", "AFS", "AFJ", "AFJS", "no-act"]

PROFILES = {
    # class: (p_noact, persistence, p_stay, {state: weight}); unlisted states share the rest
    "Control": (0.30, 0.08, 0.50, {"N": .32, "J": .22, "A": .12, "AS": .06, "AJ": .08,
                                   "AJS": .05, "AFJS": .04}),
    "BD": (0.30, 0.02, 0.40, {"N": .05, "S": .16, "J": .10, "JS": .06, "F": .03, "FS": .08,
                              "FJ": .02, "FJS": .02, "A": .10, "AS": .16, "AJ": .03, "AJS": .03,
                              "AF": .03, "AFS": .08, "AFJ": .02, "AFJS": .03}),
    "MDD": (0.35, 0.15, 0.60, {"N": .08, "S": .46, "JS": .05, "FS": .14, "AS": .06}),
    "AD": (0.30, 0.12, 0.50, {"N": .07, "F": .40, "FS": .16, "FJ": .06, "AF": .09,
                              "AFS": .05}),
}


def profile_vector(weights):
    v = np.zeros(16)
    for s, w in weights.items():
        v[STATES.index(s)] = w
    rest = [i for i in range(16) if STATES[i] not in weights]
    if rest:
        v[rest] = (1.0 - v.sum()) / len(rest)
    return v / v.sum()


def build(p_noact, persistence, p_stay, weights):
    prof = profile_vector(weights)
    m = np.zeros((17, 17))
    for j in range(16):
        m[j, :16] = (1.0 - p_noact - persistence) * prof
        m[j, j] += persistence
        m[j, 16] = p_noact
    m[16, :16] = (1.0 - p_stay) * prof
    m[16, 16] = p_stay
    for row in m:
        row[16] = 1.0 - row[:16].sum()
        assert abs(row.sum() - 1.0) <= 1e-12
    return m


def main():
    classes = {c: build(*spec).tolist() for c, spec in PROFILES.items()}
    out = {
        "note": ("Illustrative generator matrices, not fitted to any data. Row j (active state) = "
                 "p_noact at no-act + persistence at j + remainder spread by a class emotion "
                 "profile; the no-act row stays inactive with p_stay. Control favours the "
                 "no-emotion state N, joy and anger-containing states; the disorder profiles "
                 "carry less joy mass. Regenerate with tools/make_class_matrices.py."),
        "state_order": STATES,
        "classes": classes,
    }
    path = Path(__file__).resolve().parents[1] / "src/emotrans/data/class_matrices.json"
    path.write_text(json.dumps(out, indent=1) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
