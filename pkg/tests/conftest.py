import numpy as np
import pytest

from contrastlab import (
    FiniteDistribution,
    LatentClassModel,
    RepresentationFn,
    identity_representation,
    zero_representation,
)


def two_class_model() -> LatentClassModel:
    """Two 2-point classes on opposite axes; the workhorse hand-checked model."""
    return LatentClassModel(
        ambient_dim=2,
        points={"p1": [1, 0], "p2": [0, 1], "p3": [-1, 0], "p4": [0, -1]},
        classes={
            "c1": FiniteDistribution.uniform(["p1", "p2"]),
            "c2": FiniteDistribution.uniform(["p3", "p4"]),
        },
        rho=FiniteDistribution.from_mapping({"c1": 0.5, "c2": 0.5}),
    )


def singleton_model() -> LatentClassModel:
    """Two singleton classes at +-e1."""
    return LatentClassModel(
        ambient_dim=2,
        points={"p": [1, 0], "q": [-1, 0]},
        classes={
            "c1": FiniteDistribution.uniform(["p"]),
            "c2": FiniteDistribution.uniform(["q"]),
        },
        rho=FiniteDistribution.uniform(["c1", "c2"]),
    )


def random_model(rng: np.random.Generator) -> LatentClassModel:
    ambient = int(rng.integers(2, 4))
    n_points = int(rng.integers(2, 6))
    points = {f"p{i}": rng.normal(size=ambient) for i in range(n_points)}
    n_classes = int(rng.integers(2, 5))
    classes = {}
    for c in range(n_classes):
        size = int(rng.integers(1, min(3, n_points) + 1))
        ids = rng.choice(n_points, size=size, replace=False)
        w = rng.random(size) + 0.1
        w /= w.sum()
        w[-1] = 1.0 - w[:-1].sum()
        classes[f"c{c}"] = FiniteDistribution.from_mapping(
            {f"p{i}": float(p) for i, p in zip(ids, w)}
        )
    rho = rng.random(n_classes) + 0.1
    rho /= rho.sum()
    rho[-1] = 1.0 - rho[:-1].sum()
    return LatentClassModel(
        ambient_dim=ambient,
        points=points,
        classes=classes,
        rho=FiniteDistribution.from_mapping(
            {f"c{c}": float(p) for c, p in enumerate(rho)}
        ),
    )


def random_representation(rng: np.random.Generator, model: LatentClassModel) -> RepresentationFn:
    d = int(rng.integers(1, 4))
    scale = float(rng.uniform(0.2, 2.0))
    table = {pid: scale * rng.normal(size=d) for pid in model.point_ids}
    bound = max(float(np.linalg.norm(v)) for v in table.values()) + 1e-12
    return RepresentationFn(kind="table", d=d, norm_bound=bound, table=table)


def random_pair(seed: int):
    rng = np.random.default_rng(seed)
    model = random_model(rng)
    return model, random_representation(rng, model)


@pytest.fixture
def model2():
    return two_class_model()


@pytest.fixture
def identity2(model2):
    return identity_representation(model2)


@pytest.fixture
def zero2(model2):
    return zero_representation(model2, 2)
