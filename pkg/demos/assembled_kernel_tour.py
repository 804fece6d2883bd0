"""Tour: from closed-form kernels to an assembled variable-coefficient density.

Run:  python3 demos/assembled_kernel_tour.py   (finishes in ~15 s)

The script walks the main API surface in order: closed-form kernels for a
constant index, an assembled approximation for a space-time-varying index,
the correction series behind it, fitted two-sided bounds, and one residual
battery from the verification module.
"""

import numpy as np

from vbessel.coeff import builtin_fields, const_field, get_field
from vbessel.kernels import bessel_kernel, reflected_bm_kernel
from vbessel.parametrix import (
    SeriesControl,
    assemble_fs,
    fit_bound_params,
    lower_bound,
    phi_series,
    upper_bound,
)
from vbessel.verify import run_battery

np.set_printoptions(precision=6)

print("== Closed-form kernels ==")
t, x, s, y = 1.0, 1.0, 0.0, 1.2
print(f"catalog fields: {sorted(builtin_fields())}")
print(f"p_a(t=1, x=1, s=0, y=1.2) at a=-1/2 : {bessel_kernel(-0.5, t, x, s, y):.10f}")
print(f"reflected Brownian closed form      : {reflected_bm_kernel(t, x, s, y):.10f}")
print(f"p_a at a=-0.25 (planar-radius case) : {bessel_kernel(-0.25, t, x, s, y):.10f}")

print()
print("== Assembled kernel for a varying coefficient ==")
fld = get_field("SIN_TX")
print(f"coefficient at (t,x)=(1,1): {float(fld.eval(1.0, 1.0)):+.6f}  "
      f"(roughness H={fld.H}, exponent alpha={fld.alpha})")
fs = assemble_fs(fld, ctrl=SeriesControl(max_terms=20, term_tol=1e-4))
val = fs.evaluate(t, x, s, y)
frozen = bessel_kernel(float(fld.eval(s, y)), t, x, s, y)
print(f"assembled density value  : {val:.10f}")
print(f"frozen-coefficient lead  : {frozen:.10f}")
print(f"correction contribution  : {val - frozen:+.3e}")
pr = phi_series(fld, t, x, s, y)
print(f"correction series at the point: value {pr.value:+.3e}, "
      f"terms {pr.terms_used}, tail bound {pr.tail_estimate:.1e}")

print()
print("== Fitted two-sided bounds ==")
fit_grid = [(0.6, 0.8, s, y), (0.9, 1.2, s, y), (1.2, 1.0, s, y)]
up, lo = fit_bound_params(fs, fit_grid)
for (tt, xx) in [(0.75, 1.05), (1.05, 0.85)]:
    v = fs.evaluate(tt, xx, s, y)
    print(
        f"  held-out (t={tt}, x={xx}): "
        f"{lower_bound(fld, lo, tt, xx, s, y):.6f} <= {v:.6f} <= "
        f"{upper_bound(fld, up, tt, xx, s, y):.6f}"
    )

print()
print("== One verification battery ==")
for rep in run_battery(["constant-exactness"]):
    worst = max(rep.residuals.values())
    print(f"  {rep.check_name}: passed={rep.passed} "
          f"worst residual {worst:.2e} in {rep.runtime_s:.2f}s")
