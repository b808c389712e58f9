"""Show that chunked ridge accumulation equals one-shot batch training."""

import numpy as np

from gddsg import LAMBDA_POOL, RidgeGroup, batch_ridge, one_hot


def main():
    rng = np.random.default_rng(11)
    n, dim, classes = 600, 32, [0, 1, 2, 3]
    centers = 4.0 * rng.standard_normal((len(classes), dim))
    labels = rng.choice(classes, size=n)
    features = centers[labels] + rng.standard_normal((n, dim))

    # feed the same data in uneven chunks
    inc = RidgeGroup(dim)
    inc.register_classes(classes)
    for chunk in np.split(np.arange(n), [50, 220, 400]):
        inc.accumulate(features[chunk], labels[chunk])

    gram_once = features.T @ features
    targets_once = features.T @ one_hot(labels, classes)
    gram_err = np.abs(inc.gram - gram_once).max() / np.abs(gram_once).max()
    targ_err = np.abs(inc.targets - targets_once).max() / np.abs(targets_once).max()
    print(f"gram relative error vs single batch: {gram_err:.2e}")
    print(f"targets relative error vs single batch: {targ_err:.2e}")

    # closed-form solve satisfies the regularized normal equations
    lam = 1.0
    theta = inc.solve(lam)
    residual = np.abs((inc.gram + lam * np.eye(dim)) @ theta - inc.targets).max()
    print(f"normal-equation residual at lam={lam}: {residual:.2e}")

    # lambda picked by smallest squared residual on a held-out slice
    val = rng.standard_normal((100, dim))
    val_labels = rng.choice(classes, size=100)
    best = inc.select_lambda(val, val_labels, pool=LAMBDA_POOL)
    print(f"selected lambda from pool {list(LAMBDA_POOL)}: {best}")

    theta_batch = batch_ridge(features, labels, best, classes)
    batch_pred = np.asarray(classes)[np.argmax(features @ theta_batch, axis=1)]
    agree = (inc.predict(features) == batch_pred).mean()
    print(f"classification agreement with batch solve at that lambda: {agree:.3f}")


if __name__ == "__main__":
    main()
