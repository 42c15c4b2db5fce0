"""The scaled covariance kernel and its degree limit.

In the scaled angle z (geodesic angle z/sqrt(d)), the covariance functions
of the homogenized field and its derivatives converge as d grows:

    C, D -> exp(-z^2/2),  A -> -z exp(-z^2/2),  B -> (1 - z^2) exp(-z^2/2),

and the conditional variance/correlation (sigma^2, rho) converge to the
closed forms used by the limit variance.  Everything decays like a
Gaussian in z, which is what makes the variance integral converge.
"""

import math

import numpy as np

from ksslab import scaled_kernel, sigma_bar_sq, rho_bar

print(f"{'z':>5} {'C(d=100)':>10} {'C(d=1e6)':>10} {'exp(-z^2/2)':>12} "
      f"{'sigma2(1e6)':>12} {'limit':>8} {'rho(1e6)':>9} {'limit':>8}")
for z in (0.25, 0.5, 1.0, 2.0, 3.0):
    k2 = scaled_kernel(z, 100)
    k6 = scaled_kernel(z, 10**6)
    print(f"{z:>5} {k2.c:>10.6f} {k6.c:>10.6f} {math.exp(-z*z/2):>12.6f} "
          f"{k6.sigma_sq:>12.6f} {float(sigma_bar_sq(z)):>8.4f} "
          f"{k6.rho:>9.4f} {float(rho_bar(z)):>8.4f}")

# Gaussian decay bound with alpha = 0.4 along the whole admissible range
alpha = 0.4
print("\nsup over z of |A| / (z exp(-alpha z^2)), d = 17..1e6:")
for d in (17, 100, 10_000, 1_000_000):
    zs = np.linspace(1e-3, math.sqrt(17) * math.pi / 2, 200)
    ratio = max(abs(scaled_kernel(float(z), d).a) / (z * math.exp(-alpha * z * z))
                for z in zs)
    print(f"  d={d:>8}: {ratio:.4f}  (<= 1)")

# at the coincidence point the bundle is (0, 1, 1, 1) and rho -> -1
k0 = scaled_kernel(0.0, 40)
print(f"\nz=0: A={k0.a} B={k0.b} C={k0.c} D={k0.dd} "
      f"sigma2={k0.sigma_sq} rho={k0.rho}")
