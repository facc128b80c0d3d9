"""Smoke test for the kkq Python bindings.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml --features extension-module`.
"""
import json
import math

import kkq


def main():
    params = kkq.SignalParams(100.0, 10.0)
    assert abs(params.carrier_amplitude - math.sqrt(1000.0)) < 1e-12

    grid = kkq.SamplingGrid.reduced()
    assert grid.total_samples == 4000 and grid.decision_index == 2000

    ok, min_abs, winding = kkq.check_minimum_phase(params, grid, 0)
    assert ok and winding == 0 and min_abs > 0

    alpha = kkq.map_qpsk(0, 100.0)
    assert abs(alpha - 10.0 * complex(math.cos(math.pi / 4), math.sin(math.pi / 4))) < 1e-12

    alpha_prime, _, clamps = kkq.simulate_symbol(params, grid, 0, seed=7, stream=0)
    assert clamps == 0 and abs(alpha_prime - alpha) < 8.0

    again, _, _ = kkq.simulate_symbol(params, grid, 0, seed=7, stream=0)
    assert again == alpha_prime

    current = kkq.expected_current(params, grid, 1)
    h = kkq.synthesize_envelope(params, grid, 1)
    phi = kkq.hilbert_phase(current, grid.decision_index)
    assert abs(phi - math.atan2(h[2000].imag, h[2000].real)) < 1e-2

    assert abs(kkq.balanced_snr(100.0, 1e8) - 100.0) / 100.0 < 1e-5
    assert kkq.predict_iq_variances(0.0) == (0.5, 1.0 / 6.0)
    assert abs(kkq.basel_sum_check(1_000_000) - math.pi ** 2 / 6) < 1e-6

    major, minor, _, rho = kkq.pca_ellipse(0.5, 0.0, 1.0 / 6.0)
    assert abs(rho - 3.0) < 1e-12 and major == 0.5

    stats = json.loads(kkq.run_experiment('kind = "single_run"\nsymbols = 400\nn_s = [100.0]\n'))
    run = stats["runs"][0]
    print(f"single run: snr {run['snr']:.2f} (predicted {run['snr_predicted']:.2f})")

    try:
        kkq.SignalParams(-1.0, 10.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative n_s accepted")

    print("kkq", kkq.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
