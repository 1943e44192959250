#!/usr/bin/env python3
"""Regenerate the parameter-sample CSV fixtures.

Two sample matrices are produced:

* houseflies_bootstrap_B1000.csv: bootstrap replicates of the irradiated
  house-flies pilot study. Each replicate redraws the 7 dose groups
  (500 flies each) from the pilot category proportions and refits the
  continuation-ratio model. The continuation-ratio likelihood factorizes
  into two independent binomial logits, fitted here by Newton iteration:
  row 1 (unmated vs rest) on (1, x, x^2), row 2 (mated once vs twice) on
  (1, x).

* esd_prior_sample_B1000.csv: independent uniform draws from the ESD
  prior box, one column per coefficient.

Both are seeded; committed CSVs are canonical, this script documents
their provenance.
"""

import numpy as np

DOSES = np.array([80.0, 100.0, 120.0, 140.0, 160.0, 180.0, 200.0])
PILOT_COUNTS = np.array([
    [62, 5, 433],
    [94, 24, 382],
    [179, 60, 261],
    [335, 80, 85],
    [432, 46, 22],
    [487, 11, 2],
    [498, 2, 0],
], dtype=float)
GROUP_SIZE = 500


def fit_binomial_logit(X, successes, trials, max_iter=200, tol=1e-10):
    """Newton iteration for a binomial logit with count responses.

    Columns of X are standardized internally; the raw-scale coefficients
    are recovered afterwards, so badly scaled covariates (x^2 up to 4e4)
    stay well conditioned.
    """
    keep = trials > 0
    X, successes, trials = X[keep], successes[keep], trials[keep]
    scale = np.maximum(np.abs(X).max(axis=0), 1.0)
    Xs = X / scale
    beta = np.zeros(Xs.shape[1])
    for _ in range(max_iter):
        eta = Xs @ beta
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = trials * mu * (1.0 - mu)
        grad = Xs.T @ (successes - trials * mu)
        hess = Xs.T @ (w[:, None] * Xs)
        step = np.linalg.solve(hess, grad)
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            break
    return beta / scale


def houseflies_bootstrap(B, rng):
    X1 = np.column_stack([np.ones_like(DOSES), DOSES, DOSES**2])
    X2 = np.column_stack([np.ones_like(DOSES), DOSES])
    probs = PILOT_COUNTS / GROUP_SIZE
    out = np.empty((B, 5))
    for b in range(B):
        counts = np.stack([rng.multinomial(GROUP_SIZE, p) for p in probs])
        y1, y2, y3 = counts[:, 0].astype(float), counts[:, 1].astype(float), counts[:, 2].astype(float)
        b1 = fit_binomial_logit(X1, y1, y1 + y2 + y3)
        b2 = fit_binomial_logit(X2, y2, y2 + y3)
        out[b] = [b1[0], b1[1], b1[2], b2[0], b2[1]]
    return out


def write_csv(path, names, rows):
    with open(path, "w") as f:
        f.write(",".join(names) + "\n")
        for row in rows:
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")


def main():
    rng = np.random.default_rng(20240801)
    theta = houseflies_bootstrap(1000, rng)
    write_csv("houseflies_bootstrap_B1000.csv",
              ["b11", "b12", "b13", "b21", "b22"], theta)

    rng = np.random.default_rng(482)
    lower = np.array([0.25, 1.0, -0.3, -0.3, 0.1, 0.35, -8.0])
    upper = np.array([0.45, 2.0, -0.1, 0.0, 0.4, 0.45, -7.0])
    draws = rng.uniform(lower, upper, size=(1000, 7))
    write_csv("esd_prior_sample_B1000.csv",
              ["bV", "bLotA", "bLotB", "bESD", "bPulse", "bEP", "b0"], draws)


if __name__ == "__main__":
    main()
