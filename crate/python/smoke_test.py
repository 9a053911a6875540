"""Smoke test for the dinet_py extension.

Build it with `maturin develop -m crates/py/Cargo.toml`, or copy
target/release/libdinet_py.so to dinet_py.so somewhere on PYTHONPATH.
"""

import numpy as np

import dinet_py as dn


def pure_then_mixed(k, pure, mixed, mixing):
    rows = [list(np.eye(k)[i]) for i in range(k) for _ in range(pure)]
    return rows + [list(mixing)] * mixed


def test_ideal_recovery():
    p = [[1.0, 0.3, 0.2, 0.4], [0.2, 0.9, 0.3, 0.1], [0.3, 0.2, 0.8, 0.3]]
    p = [[0.5 * v for v in row] for row in p]
    pi_r = pure_then_mixed(3, 10, 20, [0.6, 0.2, 0.2])
    labels = [j % 4 for j in range(60)]
    omega = dn.build_omega(pi_r, labels, p)
    u, lam, v = dn.top_k_svd(omega, 3)
    assert len(lam) == 3 and lam[0] >= lam[1] >= lam[2] > 0
    recon = np.array(u) @ np.diag(lam) @ np.array(v).T
    assert np.abs(recon - np.array(omega)).max() < 1e-10

    corners = dn.successive_projection(u, 3)
    assert sorted(np.argmax(np.array(pi_r)[corners], axis=1)) == [0, 1, 2]

    est, _, cost = dn.kmeans(v, 4, seed=1)
    assert cost < 1e-20
    assert dn.hamm(est, labels, 4) == 0.0


def test_fit_on_sample():
    p = [[0.9, 0.1, 0.2], [0.1, 0.8, 0.1]]
    pi_r = pure_then_mixed(2, 100, 100, [0.5, 0.5])
    labels = [j % 3 for j in range(240)]
    theta = dn.sample_column_degrees(240, 2.0, 5)
    omega = dn.build_omega(pi_r, labels, p, theta_c=theta)
    edges = dn.sample_adjacency(omega, 11)
    assert edges == dn.sample_adjacency(omega, 11)

    ona = dn.fit(300, 240, edges, 2, 3, method="ona", seed=3)
    odcna = dn.fit(300, 240, edges, 2, 3, method="odcna", seed=3)
    assert ona["pi_r"] == odcna["pi_r"]
    assert dn.mhamm(ona["pi_r"], pi_r) < 0.2
    assert dn.hamm(odcna["labels"], labels, 3) < 0.2
    assert len(ona["sigma"]) == 2


def test_errors_and_experiment():
    try:
        dn.fit(3, 3, [(0, 0)], 3, 2)
    except ValueError as e:
        assert "K_r" in str(e)
    else:
        raise AssertionError("K_r > K_c accepted")
    csv = dn.run_experiment("experiment-3", repetitions=1, seed=2)
    lines = csv.strip().splitlines()
    assert lines[0].startswith("sweep_value,method,mean_mhamm")
    assert len(lines) > 2


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)
