"""Numba-compiled inner loops.

The sliding-window correlation field is the only O(rows * cols * bands)
computation that numpy cannot express without materializing a dozen
full-size temporaries, so it gets a dedicated run-sum kernel: column sums
are maintained incrementally while a row window slides down the image, and
the window sum slides along each row. One pass per band, deterministic
summation order, no threading.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def correlation_field_band(f, p, mean_f, mean_p, sigma, threshold, out_rho, out_keep):
    """Fill ``out_rho``/``out_keep`` with Pearson correlations of every
    ``sigma x sigma`` window of ``f`` against ``p`` (valid positions).

    ``mean_f``/``mean_p`` are subtracted on the fly: global centering keeps
    the running sums small without materializing centered copies, and leaves
    Pearson correlations unchanged.
    """
    rows, cols = f.shape
    valid_rows = rows - sigma + 1
    valid_cols = cols - sigma + 1
    n = sigma * sigma

    col_f = np.zeros(cols)
    col_p = np.zeros(cols)
    col_ff = np.zeros(cols)
    col_pp = np.zeros(cols)
    col_fp = np.zeros(cols)
    for r in range(sigma):
        for c in range(cols):
            fv = f[r, c] - mean_f
            pv = p[r, c] - mean_p
            col_f[c] += fv
            col_p[c] += pv
            col_ff[c] += fv * fv
            col_pp[c] += pv * pv
            col_fp[c] += fv * pv

    for i in range(valid_rows):
        if i > 0:
            r_out = i - 1
            r_in = i + sigma - 1
            for c in range(cols):
                fo = f[r_out, c] - mean_f
                po = p[r_out, c] - mean_p
                fi = f[r_in, c] - mean_f
                pi = p[r_in, c] - mean_p
                col_f[c] += fi - fo
                col_p[c] += pi - po
                col_ff[c] += fi * fi - fo * fo
                col_pp[c] += pi * pi - po * po
                col_fp[c] += fi * pi - fo * po
        s_f = 0.0
        s_p = 0.0
        s_ff = 0.0
        s_pp = 0.0
        s_fp = 0.0
        for c in range(sigma):
            s_f += col_f[c]
            s_p += col_p[c]
            s_ff += col_ff[c]
            s_pp += col_pp[c]
            s_fp += col_fp[c]
        for j in range(valid_cols):
            if j > 0:
                c_out = j - 1
                c_in = j + sigma - 1
                s_f += col_f[c_in] - col_f[c_out]
                s_p += col_p[c_in] - col_p[c_out]
                s_ff += col_ff[c_in] - col_ff[c_out]
                s_pp += col_pp[c_in] - col_pp[c_out]
                s_fp += col_fp[c_in] - col_fp[c_out]
            win_mean_f = s_f / n
            win_mean_p = s_p / n
            var_f = s_ff / n - win_mean_f * win_mean_f
            var_p = s_pp / n - win_mean_p * win_mean_p
            if var_f < threshold or var_p < threshold:
                out_rho[i, j] = 0.0
                out_keep[i, j] = False
            else:
                rho = (s_fp / n - win_mean_f * win_mean_p) / np.sqrt(var_f * var_p)
                if rho > 1.0:
                    rho = 1.0
                elif rho < -1.0:
                    rho = -1.0
                out_rho[i, j] = rho
                out_keep[i, j] = True
