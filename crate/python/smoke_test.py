"""Smoke test for the `liouville` extension module.

Build and install it first:

    pip install --no-build-isolation -e crates/py
    python python/smoke_test.py
"""

import math

import liouville


def main():
    field = liouville.sample_field(32, 16, seed=1)
    rows, cols = field.shape
    assert len(field.values) == rows * cols
    assert field.values == liouville.sample_field(32, 16, seed=1).values

    measure = liouville.lqg_measure(field, gamma=1.0, epsilon=2.0)
    assert measure.shape == (32, 16)
    assert all(m > 0 for m in measure.cell_mass)
    assert math.isclose(measure.total_mass(), sum(measure.cell_mass), rel_tol=1e-9)

    catalog = liouville.Catalog(measure, stride=1, r_cap=8.0)
    assert len(catalog) > 0
    masses = sorted(catalog.ball(i)[3] for i in range(len(catalog)))
    delta = masses[len(masses) // 2]
    count = catalog.count_distance(delta, (2.5, 2.5), (29.5, 13.5))
    modified = catalog.modified_distance(delta, 8.0, (2.5, 2.5), (29.5, 13.5))
    if count.reached:
        assert modified.value <= count.value <= 2 * modified.value + 4
    hard = catalog.crossing_distance(delta, 8.0, "hard")
    easy = catalog.crossing_distance(delta, 8.0, "easy")
    print(f"count {count.value}, modified {modified.value:.3f}, hard {hard.value:.3f}, easy {easy.value:.3f}")

    report = liouville.oracle_check(instances=3, seed=0)
    for check in report["equivalence"] + report["comparisons"]:
        assert check["violations"] == 0, check

    config = "scales = [16, 32]\nsamples = 8\nbootstrap_resamples = 50\n"
    rsw = liouville.run_experiment("rsw", config)
    assert [s["scale"] for s in rsw["scales"]] == [16, 32]
    print(f"rsw verdict {rsw['verdict']}, stability {rsw['stability']:.3f}")

    try:
        liouville.run_experiment("rsw", "gamma = 2.5")
    except liouville.LiouvilleError as e:
        assert "gamma" in str(e)
    else:
        raise AssertionError("supercritical gamma accepted")

    assert "gamma = 1.0" in liouville.default_config()
    print("smoke test passed")


if __name__ == "__main__":
    main()
