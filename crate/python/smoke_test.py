"""Smoke test of the fstchain Python extension.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import cmath
import json
import math
from pathlib import Path

import fstchain

ROOT = Path(__file__).resolve().parent.parent


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    chain = fstchain.Chain(15, math.pi / 2)
    u = chain.single_propagator(chain.tau)
    close(abs(u[0][14]) ** 2, 0.5, 1e-9)
    close(abs(u[0][0]) ** 2, 0.5, 1e-9)
    close(chain.mirror_asymmetry(), 0.0, 1e-12)

    report = fstchain.Chain(5, 0.3 * math.pi).verify_mapping()
    assert report["passed"] and report["distance"] < 1e-8, report

    k = fstchain.effective_gate(3, math.pi)
    for r in range(8):
        for c in range(8):
            dot = sum(k[x][r].conjugate() * k[x][c] for x in range(8))
            close(abs(dot - (1 if r == c else 0)), 0.0, 1e-12)

    d = fstchain.decompose(6, 0.4 * math.pi)
    assert (d["fswap_count"], d["iswap_count"]) == (12, 3), d
    assert d["z_layer_distance"] < 1e-8
    close(fstchain.speed_gain(6, math.pi), 2.0, 1e-12)

    basis = [0j] * 16
    basis[0b0110] = 1
    assert fstchain.parity_measure(basis)["parity"] == "even"
    basis = [0j] * 16
    basis[0b0111] = 1
    assert fstchain.parity_measure(basis, method="pair_rotations")["parity"] == "odd"

    # |+>|+>|0> has <X X Z> = 1
    h = 1 / math.sqrt(2)
    plus_plus_zero = [0j] * 8
    for x in (0b000, 0b010, 0b100, 0b110):
        plus_plus_zero[x] = h * h
    close(fstchain.correlator(plus_plus_zero, "XXZ"), 1.0, 1e-9)

    psi = [cmath.exp(1j * 0.3 * k) / 4 for k in range(16)]
    out = fstchain.Chain(4, 1.1).evolve(psi, 0.7)
    dense = fstchain.Chain(4, 1.1).evolve(psi, 0.7, method="dense")
    close(max(abs(a - b) for a, b in zip(out, dense)), 0.0, 1e-9)

    scenario = (ROOT / "configs" / "flip_n15.json").read_text()
    result = fstchain.run_scenario(scenario)
    close(result["populations"][-1][0], 1.0, 1e-6)

    zeta = fstchain.zz_coupling(0.3, 0.3, pair=1)
    assert abs(zeta) / (2 * math.pi) < 1e3, zeta

    pulse = fstchain.seed_pulse(math.pi)
    m = fstchain.pulse_metrics(math.pi, json.dumps(pulse), substeps=1)
    assert m["avg_fidelity"] <= 1 - m["leakage"] + 1e-12
    assert m["unitarity_error"] < 1e-8

    print(f"fstchain {fstchain.__version__}: smoke test passed (seed-pulse infidelity {m['infidelity']:.3e})")


if __name__ == "__main__":
    main()
