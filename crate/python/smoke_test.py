"""Exercise the Python bindings end to end. Exits non-zero on the first failure."""

import cmath
import json

import qdilate_py as qd


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]


def dagger(a):
    return [[a[j][i].conjugate() for j in range(len(a))] for i in range(len(a[0]))]


def dist(a, b):
    return sum(abs(x - y) ** 2 for ra, rb in zip(a, b) for x, y in zip(ra, rb)) ** 0.5


def compress(m, h):
    return [row[:h] for row in m[:h]]


def check_pair():
    pair = qd.generate({"kind": "sylvester_qpair", "h_dim": 3, "variant": "middle",
                        "twist": {"type": "random"}, "scale": 0.9}, seed=4)
    assert isinstance(pair, qd.QPair) and pair.variant == "middle"
    assert pair.verify_relations()["passed"]
    out = qd.dilate_pair(pair, k_max=4)
    assert out["passed"], out["report"]
    v1, v2 = out["v1"], out["v2"]
    # V1 is isometric on H and compresses back to T1.
    h = pair.dim
    cols = [row[:h] for row in v1]
    eye = [[1.0 if i == j else 0.0 for j in range(h)] for i in range(h)]
    assert dist(matmul(dagger(cols), cols), eye) < 1e-10
    assert out["report"]["isometry_defect_v1"] < 1e-10
    assert dist(compress(v1, pair.dim), pair.t1()) < 1e-10
    assert dist(compress(matmul(v1, v2), pair.dim), matmul(pair.t1(), pair.t2())) < 1e-10

    back = qd.QPair.from_json(pair.to_json())
    assert dist(back.q(), pair.q()) == 0.0


def check_tuple():
    t = qd.generate(json.dumps({"kind": "compressed_rotational", "n": 2, "deg": 2,
                                "scale": 0.9}), seed=3)
    assert isinstance(t, qd.QTuple) and t.n == 2
    assert t.brehmer_check()["passed"]
    pure = qd.pure_dilation(t)
    assert pure["passed"], pure["report"]
    assert pure["report"]["isometry_defect"] < 1e-10
    assert len(pure["shifts"]) == 2

    u = qd.generate({"kind": "mixed_brehmer", "n": 2, "pure": [], "deg": 1, "m": 3,
                     "scale": 1.0}, seed=1)
    br = qd.brehmer_dilation(u)
    assert br["passed"], br["report"]
    for part in br["parts"]:
        if part["subset"]:
            assert part["diagnostics"]["pi_norm"] < 1e-8


def check_constructors():
    q = cmath.exp(0.7j)
    t = qd.QTuple([[[0.5]], [[0.25j]]], [[0.0, 0.7], [-0.7, 0.0]])
    assert abs(t.theta()[0][1] - 0.7) < 1e-15
    assert abs(t.szego_defect()[0][0] - (1 - 0.25) * (1 - 0.0625)) < 1e-15
    p = qd.QPair.scalar([[0.0]], [[0.5]], q, "left")
    assert abs(p.q()[0][0] - q) < 1e-15

    j = [[0.0, 0.0], [1.0, 0.0]]
    bad = qd.QTuple([j, j], [[0.0, 0.0], [0.0, 0.0]])
    try:
        qd.brehmer_dilation(bad)
    except qd.QDilateError as e:
        assert str(e).startswith("not_brehmer"), e
    else:
        raise AssertionError("expected not_brehmer")

    try:
        qd.QTuple([], [])
    except qd.QDilateError as e:
        assert str(e).startswith("invalid_instance"), e
    else:
        raise AssertionError("expected invalid_instance")


if __name__ == "__main__":
    for f in (check_pair, check_tuple, check_constructors):
        f()
        print(f"ok {f.__name__}")
    print("smoke test passed")
