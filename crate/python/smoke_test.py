"""Smoke test for the ibtrans Python module.

Build and install first:  maturin develop -m crates/python/Cargo.toml --release
"""

import math
import pathlib
import tempfile

import ibtrans

ROOT = pathlib.Path(__file__).resolve().parent.parent


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    assert close(ibtrans.entropy([0.5, 0.25, 0.25]), 1.5)
    assert close(ibtrans.kl_divergence([0.5, 0.5], [0.25, 0.75]), 0.5 * math.log2(2) + 0.5 * math.log2(2 / 3))
    assert close(ibtrans.mutual_information([[0.5, 0.0], [0.0, 0.5]]), 1.0)

    beliefs = ibtrans.beliefs_from_similarity([[1.0, 0.2, 0.0], [0.2, 1.0, 0.1], [0.0, 0.1, 1.0]], 4.0)
    identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    c = ibtrans.complexity(identity)
    a = ibtrans.accuracy(identity, beliefs)
    assert close(c, math.log2(3)) and 0.0 < a <= c

    front = ibtrans.Frontier.compute(beliefs, betas=[1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
    assert len(front) == 6
    assert all(conv for _, _, _, conv, _ in front.points())
    eps, _ = front.encoder_deviation(identity)
    assert eps >= -1e-6
    for i in range(len(front)):
        assert front.encoder_deviation(front.encoder(i))[0] <= 1e-6

    with tempfile.TemporaryDirectory() as tmp:
        path = pathlib.Path(tmp) / "frontier.csv"
        front.write_csv(str(path))
        again = ibtrans.Frontier.read_csv(str(path))
        assert again.betas == front.betas
        assert close(again.deviation(c, a)[0], eps, 1e-9)

    perturbed = ibtrans.perturb(identity, 0.5, 10, seed=3)
    assert len(perturbed) == 10 and all(p != identity for p in perturbed)
    random = ibtrans.random_encoders(3, 5, 20, seed=1)
    assert all(sum(row) == 1.0 and max(row) == 1.0 for enc in random for row in enc)

    vectors = [[math.sin(i + k) for k in range(4)] for i in range(12)]
    target = [[sum(x * y for x, y in zip(u, v)) for v in vectors] for u in vectors]
    model = ibtrans.LowRankModel.train(vectors, target, rank=2)
    assert len(model.projection) == 2 and model.rank == 2
    pred = model.predict(vectors)
    assert close(pred[0][1], model.predict_pair(vectors[0], vectors[1]), 1e-9)
    mean_rho, _ = ibtrans.cross_validate(vectors, target, "low_rank", folds=3, ranks=[2, 4])
    assert mean_rho > 0.9

    try:
        ibtrans.perturb(identity, 1.5, 1)
    except ValueError as err:
        assert "1.5" in str(err)
    else:
        raise AssertionError("fraction 1.5 accepted")

    with tempfile.TemporaryDirectory() as tmp:
        summary = ibtrans.analyze(str(ROOT / "data" / "toy" / "config.toml"), tmp + "/out")
        assert summary["points"] > 0
        assert (pathlib.Path(tmp) / "out" / "frontier.csv").is_file()

    print("python smoke test passed:", summary)


if __name__ == "__main__":
    main()
