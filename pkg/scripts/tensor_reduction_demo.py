#!/usr/bin/env python3
"""Rank-2 reduction of the five-point tensor integral around four dimensions:
computes the sixteen scalar coefficient families and checks one assembled
component against the direct Monte Carlo of the tensor numerator."""

import argparse
import time

import numpy as np

from orthantloop.cli import parse_config
from orthantloop.oracle import MCSettings, momenta_for_config, tensor_rank2_mc
from orthantloop.quadrature import QuadratureSettings
from orthantloop.tensor import reduce_rank2_5pt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/pentagon_d6.cfg")
    ap.add_argument("--order", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-5)
    ap.add_argument("--mc-samples", type=int, default=4_000_000)
    args = ap.parse_args()

    cfg, _, _, _ = parse_config(args.config)
    from orthantloop.kinematics import KinematicConfig
    cfg = KinematicConfig.from_d_epsilon(cfg.masses, np.array(cfg.invariants),
                                         (1,) * 5, d=4)
    momenta = momenta_for_config(cfg)
    st = QuadratureSettings(rel_tol=args.tol, abs_tol=args.tol * 1e-4)

    t0 = time.time()
    red = reduce_rank2_5pt(cfg, momenta, order=args.order, settings=st)
    print(f"reduction done in {time.time() - t0:.1f}s")
    print(f"g family c0:      {red.g_coefficient.coefficients[0].value.real:+.8f}")
    for k in range(5):
        print(f"diag {k + 1} c0:        "
              f"{red.diag_coefficients[k].coefficients[0].value.real:+.8f}")
    for (k, kp), s in sorted(red.offdiag_coefficients.items()):
        print(f"offdiag {k + 1}{kp + 1} c0:     {s.coefficients[0].value.real:+.8f}")

    mc = MCSettings(samples=args.mc_samples, seed=7, batch=1_000_000)
    for mu, nu in ((0, 0), (1, 2)):
        direct = tensor_rank2_mc(cfg.with_dimension(4.0), momenta, mu, nu, mc)
        assembled = red.assemble(mu, nu, eps=0.0)
        print(f"component ({mu},{nu}): assembled {assembled.real:+.6f}  "
              f"direct {direct.value.real:+.6f} +- {direct.abs_error:.1e}")


if __name__ == "__main__":
    main()
