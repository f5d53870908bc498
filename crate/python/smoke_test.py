"""Smoke test for the surface_darcy extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/surface_darcy-*.whl

then run `python python/smoke_test.py`.
"""

import math

import surface_darcy as sd


def check(cond, msg):
    if not cond:
        raise AssertionError(msg)
    print("ok", msg)


def main():
    check(sd.eoc([1.0, 0.25], [1.0, 0.5]) == [2.0], "eoc of a quadratic sequence is 2")
    try:
        sd.eoc([1.0, 0.0], [1.0, 0.5])
    except ValueError:
        check(True, "eoc rejects a zero error")
    else:
        raise AssertionError("eoc accepted a zero error")

    spec = sd.case_spec(8)
    check((spec["k_u"], spec["k_p"], spec["k_g"]) == (1, 2, 2), "case 8 orders")
    check(spec["family"] == "unstructured", "case 8 mesh family")

    torus = sd.Torus(1.0, 0.5)
    p = torus.closest_point([1.7, 0.0, 0.1])
    check(abs(torus.signed_distance(p)) < 1e-12, "closest point lies on the torus")
    u = torus.benchmark_velocity([1.5, 0.0, 0.0])
    check(max(abs(a - b) for a, b in zip(u, [0.0, 0.0, -1.5])) < 1e-14, "benchmark velocity at the outer equator")
    check(abs(torus.area - 4 * math.pi**2 * 0.5) < 1e-12, "torus area")

    report = sd.mesh_report(32, kg=2)
    check(report["max_distance"] < 1e-3, "k_g=2 mesh at n=32 stays within 1e-3 of the surface")

    level = sd.solve_level(16, case=1)
    check(level["residual"] <= 1e-10, "GMRES residual at n=16")
    check(abs(level["norms"]["pressure_integral"]) <= 1e-9 * level["norms"]["area"], "zero-mean pressure")

    record = sd.run_case(1, levels=[16, 32, 64])
    eu, ep, *_ = record.last_eoc()
    check(abs(eu - 2.0) < 0.3 and abs(ep - 2.0) < 0.3, f"case 1 orders e_u={eu:.2f} e_p={ep:.2f}")
    check(record.to_csv().splitlines()[0].startswith("level,n_major,h,n_dofs"), "CSV header")
    check(len(record.rows) == 3 and record.failure is None, "three complete levels")

    try:
        sd.run_case(9)
    except sd.ConfigError:
        check(True, "unknown case raises ConfigError")
    else:
        raise AssertionError("case 9 accepted")

    try:
        sd.run_case(1, levels=[16], max_iters=2, restart=10)
    except sd.ConvergenceError:
        raise AssertionError("solver failure should be recorded, not raised")
    failed = sd.run_case(1, levels=[16], max_iters=2, restart=10)
    check(failed.failure is not None, "solver failure is recorded in a partial record")
    print("smoke test passed")


if __name__ == "__main__":
    main()
