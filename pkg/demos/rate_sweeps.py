"""Achievable rate landscapes.

Two sweeps of the finite-blocklength rate formula:

  1. rate vs blocklength N, for several quantizer finenesses sigma_z and
     CSI distortion bounds D -- with fine feedback quantization and small
     distortion the curve hugs the perfect-CSI iterative-coding rate;
  2. rate vs distortion bound D at fixed N -- the rate degrades smoothly
     and hits zero when the distortion swallows the whole estimate.

Writes PNG plots next to this script when run with --plot.
"""

import argparse
import math

import numpy as np

from skfade import ChannelParams, CsiEstimate, achievable_rate, q_inverse

SNR = 10.0
P_TILDE = 10.0
EPSILON = 1e-6
H_TRUE = 0.9


def perfect_csi_reference(n):
    # noiseless-feedback, exact-CSI limit of the same formula
    ell = q_inverse(EPSILON / 4.0) ** 2 / 3.0
    c = H_TRUE ** 2 * SNR
    return math.log2(1.0 + c * (1.0 + c) ** (n - 1) / ell) / (2.0 * n)


def rate_vs_blocklength():
    print(f"Rate vs blocklength (SNR={SNR:g}, eps={EPSILON:g}, h=h_hat={H_TRUE}, "
          f"P_tilde={P_TILDE:g})")
    settings = [
        ("sigma_z=1e-3, D=0   ", 1e-3, 0.0),
        ("sigma_z=1e-3, D=0.05", 1e-3, 0.05),
        ("sigma_z=0.5,  D=0.05", 0.5, 0.05),
    ]
    ns = list(range(10, 201, 10))
    columns = []
    for label, sigma_z, dist in settings:
        ch = ChannelParams(h=H_TRUE, sigma_sq=1.0, P=SNR, P_tilde=P_TILDE,
                           sigma_z=sigma_z)
        est = CsiEstimate(h_hat=H_TRUE, D=dist)
        columns.append([achievable_rate(ch, est, n, EPSILON).rate for n in ns])
    ref = [perfect_csi_reference(n) for n in ns]

    header = "  N   perfect-CSI " + " ".join(f"{lbl}" for lbl, _, _ in settings)
    print(header)
    for i, n in enumerate(ns):
        row = f"{n:4d}   {ref[i]:10.6f} "
        row += " ".join(f"{col[i]:20.6f}" for col in columns)
        print(row)
    print()
    return ns, ref, settings, columns


def rate_vs_distortion():
    n = 100
    sigma_z = 1e-3
    print(f"Rate vs distortion bound (N={n}, SNR={SNR:g}, sigma_z={sigma_z:g}, "
          f"eps={EPSILON:g}, h_hat={H_TRUE})")
    ch = ChannelParams(h=H_TRUE, sigma_sq=1.0, P=SNR, P_tilde=P_TILDE,
                       sigma_z=sigma_z)
    ds = np.linspace(0.0, 0.9, 19)
    rates = [achievable_rate(ch, CsiEstimate(h_hat=H_TRUE, D=float(d)), n,
                             EPSILON).rate for d in ds]
    for d, r in zip(ds, rates):
        bar = "#" * int(round(40 * r / max(rates)))
        print(f"  D={d:5.2f}  rate={r:8.5f}  {bar}")
    print()
    return ds, rates


def save_plots(ns, ref, settings, columns, ds, rates):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(ns, ref, "k--", label="perfect CSI, noiseless feedback")
    for (label, _, _), col in zip(settings, columns):
        ax.plot(ns, col, marker=".", label=label.strip())
    ax.set_xlabel("blocklength N")
    ax.set_ylabel("rate (bits/channel use)")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig("rate_vs_blocklength.png", dpi=150)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(ds, rates, marker="o")
    ax.set_xlabel("distortion bound D")
    ax.set_ylabel("rate (bits/channel use)")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig("rate_vs_distortion.png", dpi=150)
    print("wrote rate_vs_blocklength.png, rate_vs_distortion.png")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--plot", action="store_true", help="save PNG figures")
    args = parser.parse_args()
    ns, ref, settings, columns = rate_vs_blocklength()
    ds, rates = rate_vs_distortion()
    if args.plot:
        save_plots(ns, ref, settings, columns, ds, rates)
