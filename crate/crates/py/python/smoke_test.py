"""Smoke test for the spinbath_py extension module.

Build and run from the repository root:

    cargo build -p spinbath-py --features extension-module --release
    cp target/release/libspinbath_py.so /tmp/spinbath_py.so
    PYTHONPATH=/tmp python3 crates/py/python/smoke_test.py
"""

import json
import math

import spinbath_py as sb


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    # state algebra
    plus = sb.DensityMatrix.from_bloch(1.0, 0.0, 0.0)
    minus = sb.DensityMatrix.from_bloch(-1.0, 0.0, 0.0)
    close(plus.trace_distance(minus), 1.0, 1e-12)
    close(sb.DensityMatrix.ground().p0(), 1.0, 1e-15)

    # bath
    spec = sb.Spectrum.default()
    assert len(spec.modes) == 3
    re, im = spec.coherence(0.0)
    close(re, 1.0, 1e-12)
    close(im, 0.0, 1e-12)
    polarized = spec.polarized(50.0)
    assert sum(1 for w, _, _ in polarized.modes if w > 0) == 1

    # pulses
    seq = sb.PulseSequence.from_dsl("rabi 5.37MHz\nseq s:\n  pulse X 90\n  delay 400ns\n  pulse X 90\n", "s")
    assert len(seq) == 3
    close(seq.duration_ns, 400.0 + 2 * 250.0 / 5.37, 1e-9)
    rho = sb.PulseSequence.rdja("U3", 0.0).instantaneous().evolve(sb.Spectrum.point_mass(0.0))
    close(rho.p0(), 1.0, 1e-10)

    # protocols and analysis
    taus = [0.0, 100.0, 200.0]
    scan = sb.rdja_scan(sb.Spectrum.point_mass(0.0), taus)
    for c in scan["contrast"]:
        close(c, 1.0, 1e-10)

    t = [10.0 * i for i in range(201)]
    d = sb.trace_distance_curve(spec, t, ideal_pulses=True)
    for ti, di in zip(t, d):
        expect = abs(1 / 3 + 2 / 3 * math.cos(2 * math.pi * 2.170e-3 * ti)) * math.exp(-((ti / 1382.0) ** 2))
        close(di, expect, 1e-6)
    fit = sb.fit_trace_distance(t, d)
    close(fit["splitting_mhz"], 2.170, 2.170e-3)
    close(fit["b"] / fit["a"], 2.0, 5e-3)
    n_rev, n_int = sb.non_markovianity(t, d)
    assert n_rev > 0 and n_int > 0

    echo = sb.echo_scan(spec, 170.0, [170.0], ideal_pulses=True)
    assert 0.0 <= echo["pos"][0] <= 1.0 + 1e-9

    cols, rows = sb.run_config(json.dumps({
        "kind": "rabi",
        "spectrum": {"point_mass": {"detuning_mhz": 0}},
        "grid": {"start": 0, "stop": 100, "step": 10},
    }))
    assert cols == ["duration_ns", "p0"] and len(rows) == 11
    assert sb.run_config_csv(json.dumps({
        "kind": "rabi", "grid": {"start": 0, "stop": 20, "step": 10},
    })).startswith("duration_ns,p0\n")

    # errors carry their code
    try:
        sb.PulseSequence.from_dsl("seq s:\n  delay 400 ns\n", "s")
    except sb.SpinbathError as e:
        assert e.args[1] == "E_DSL_MALFORMED_NUMBER", e.args
    else:
        raise AssertionError("expected a parse error")

    print("spinbath_py smoke test passed")


if __name__ == "__main__":
    main()
