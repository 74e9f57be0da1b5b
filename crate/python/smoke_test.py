"""Smoke test for the `occupancy` extension module.

Build and install the module first, e.g. `pip install ./crates/python`,
or copy `target/release/liboccupancy.so` to `occupancy.so` on PYTHONPATH.
"""

import math

import occupancy


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    u = occupancy.Distribution.uniform(10)
    assert close(occupancy.exact_em(u, 10, 0), 0.9 ** 10)
    assert close(occupancy.exact_em_poisson(occupancy.Distribution.uniform(2), 2.0, 0), math.exp(-1))

    z = occupancy.Distribution.from_json('{"family": "zipf", "alpha": 0.5}')
    assert z.label == "zipf(alpha=0.5)"
    rep = occupancy.bound_suite(z, 1000, 0)
    assert rep["verdict"] == "pass"
    assert all(b["verdict"] != "fail" for b in rep["bounds"])
    value, eps = occupancy.upper_tg(z, 1000, 0)
    assert value >= rep["exact"] and eps is not None

    assert close(occupancy.turing(["a", "b", "b", "c"], 0), 0.5)
    iv = occupancy.concentration_interval("cbmm3", z, 10_000, 0, 3.0)
    assert iv["lower"] < iv["upper"]

    mc = occupancy.monte_carlo(u, 20, [0, 1], 500, seed=1)
    assert mc == occupancy.monte_carlo(u, 20, [0, 1], 500, seed=1)
    for row in mc["rows"]:
        assert abs(row["z_score"]) < 5

    seg = occupancy.MetricModel.uniform_segment(0.0, 1.0)
    assert close(seg.exact_em_delta(1, 0.5, 0), 0.25, 1e-10)
    assert close(seg.nu_delta(0.5, 0.6), 2 * math.log(1 / 0.6))
    assert seg.bkgen_upper(100, 0.1, [(0.5, 1.0, 0.05)]) <= 10 / (100 * math.e) + 1e-15

    try:
        occupancy.Distribution.zipf(1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("zipf(1.5) should be rejected")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
