#!/usr/bin/env python3
"""Generate the synthetic coastal shakemap pair in assets/rasters/.

Closed form: peak shaking at the western edge, decaying eastward.

    d_east(col)  = (col + 0.5) * cellsize            # degrees east of xll
    pga_g        = 1.3 * exp(-0.55 * d_east)         # mean PGA in g
    mean cell    = ln(pga_g)                         # natural-log mean
    sigma cell   = 0.20 + 0.03 * d_east              # natural-log sigma

Grid: 20 cols x 40 rows, cellsize 0.25 deg, lower-left corner
(-125.25 E, 39.0 N) -> lon span [-125.25, -120.25], lat span [39, 49].

A 2x2 NODATA patch sits in the mean grid's southeast corner and a single
NODATA cell in the sigma grid's northeast corner, so both no-data paths are
exercised by the shipped files.
"""

import math
import os

NCOLS = 20
NROWS = 40
XLL = -125.25
YLL = 39.0
CELL = 0.25
NODATA = -9999.0

PGA_WEST = 1.3       # g at the coast
DECAY = 0.55         # per degree eastward
SIGMA_BASE = 0.20
SIGMA_SLOPE = 0.03


def header():
    return (
        f"ncols {NCOLS}\n"
        f"nrows {NROWS}\n"
        f"xllcorner {XLL}\n"
        f"yllcorner {YLL}\n"
        f"cellsize {CELL}\n"
        f"NODATA_value {NODATA:.1f}\n"
    )


def d_east(col):
    return (col + 0.5) * CELL


def mean_cell(row, col):
    # File rows run north->south; the decay depends only on longitude.
    if row >= NROWS - 2 and col >= NCOLS - 2:
        return NODATA
    return math.log(PGA_WEST * math.exp(-DECAY * d_east(col)))


def sigma_cell(row, col):
    if row == 0 and col == NCOLS - 1:
        return NODATA
    return SIGMA_BASE + SIGMA_SLOPE * d_east(col)


def write(path, cell):
    with open(path, "w") as f:
        f.write(header())
        for row in range(NROWS):
            f.write(" ".join(f"{cell(row, col):.6f}" for col in range(NCOLS)))
            f.write("\n")


if __name__ == "__main__":
    out = os.path.join(os.path.dirname(__file__), "..", "assets", "rasters")
    os.makedirs(out, exist_ok=True)
    write(os.path.join(out, "synthetic_csz_mean.asc"), mean_cell)
    write(os.path.join(out, "synthetic_csz_sigma.asc"), sigma_cell)
    print("wrote synthetic_csz_mean.asc and synthetic_csz_sigma.asc")
