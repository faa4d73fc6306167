#!/usr/bin/env python3
# Copyright 2026 The secstack Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Plots a bench CSV: payload vs time per packet, and payload vs goodput."""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", help="output of bench --out")
    ap.add_argument("--prefix", default="results", help="writes <prefix>_time.png and <prefix>_goodput.png")
    args = ap.parse_args()

    df = pd.read_csv(args.csv)

    fig, ax = plt.subplots(figsize=(6, 4))
    for variant, g in df.groupby("variant", sort=False):
        ax.errorbar(g.payload, g.t_full_mean, yerr=g.t_full_std, marker="o", capsize=2, label=f"{variant} full stack")
        if g.t_dtls_mean.notna().any():
            ax.errorbar(g.payload, g.t_dtls_mean, yerr=g.t_dtls_std, marker="s", linestyle="--", capsize=2,
                        label=f"{variant} DTLS only")
    ax.set_xlabel("payload [B]")
    ax.set_ylabel("time per packet [us]")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(f"{args.prefix}_time.png", dpi=150)

    fig, ax = plt.subplots(figsize=(6, 4))
    for variant, g in df.groupby("variant", sort=False):
        ax.plot(g.payload, g.goodput_mean / 1000, marker="o", label=variant)
    ax.set_xlabel("payload [B]")
    ax.set_ylabel("goodput [Mbit/s]")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(f"{args.prefix}_goodput.png", dpi=150)


if __name__ == "__main__":
    main()
