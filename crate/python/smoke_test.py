"""Smoke test for the compiled `hughes` extension module.

Build and install first, e.g. `pip install --no-build-isolation -e crates/py`.
"""

import math

import hughes


def main():
    model = hughes.VelocityModel(1.0, 1.0)
    assert model.v(0.5) == 0.5
    assert model.flux(0.5) == 0.25

    datum = hughes.Datum([(-1.0, -0.5, 0.9), (-0.4, 0.0, 0.9)])
    assert abs(datum.mass - 0.81) < 1e-15
    positions, ell = datum.atomize(200)
    assert len(positions) == 201
    assert abs(ell - 0.00405) < 1e-15

    turning = hughes.solve_zeta(positions, ell, 1.3)
    assert -1.0 < turning["zeta"] < 1.0
    assert abs(turning["xi"] - turning["zeta"]) <= 1.3 * ell / 2 + 1e-12

    result = hughes.run(datum, 200, 1.3, engine="discrete", sample_every=0.5)
    t = result["evacuation_time"]
    assert t is not None and math.isfinite(t)
    assert len(result["exits"]) == 201
    print(f"discrete evacuation time at alpha = 1.3: {t:.6f} ({result['steps']} steps)")

    event = hughes.run(datum, 50, 1.3, engine="event")
    print(f"event engine, n = 50: {event['evacuation_time']:.6f}")

    times = hughes.sweep(datum, 50, [0.0, 1.0, 2.0])
    assert len(times) == 3 and all(x > 0 for x in times)
    print("sweep:", ", ".join(f"{x:.4f}" for x in times))

    try:
        hughes.run(datum, 200, 1.3, dt=0.1)
    except ValueError as err:
        print("CFL guard:", err)
    else:
        raise AssertionError("CFL violation was accepted")

    print("ok")


if __name__ == "__main__":
    main()
