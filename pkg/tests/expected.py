"""Published target values for the reproduction presets.

Cross-sectional rows map ``(block, m)`` to the baseline CV and, per network
size ``k``, the triple ``(E(n), CV, RE)``.  Change rows map a block to SE of
the panel estimator (in units of 1e-2) and REs of pACS and iACS per setting.
"""

SETTINGS = ("L1", "L2", "L3", "M1", "M2", "M3", "S1", "S2", "S3")

TABLE1 = {
    ("srs", 1000): (0.31, {100: (1631, 0.24, 0.58), 10: (1085, 0.31, 0.96), 2: (1010, 0.31, 0.99)}),
    ("srs", 1630): (0.24, {100: (2423, 0.15, 0.40), 10: (1766, 0.24, 0.93), 2: (1646, 0.24, 0.99)}),
    ("srs", 2420): (0.20, {100: (3306, 0.10, 0.23), 10: (2614, 0.19, 0.89), 2: (2443, 0.20, 0.99)}),
    ("srs", 5000): (0.14, {100: (5944, 0.02, 0.03), 10: (5352, 0.12, 0.79), 2: (5048, 0.14, 0.97)}),
    ("srs", 10000): (0.09, {100: (10900, 0.00, 0.00), 10: (10551, 0.07, 0.59), 2: (10090, 0.09, 0.95)}),
    ("eta2", 1000): (0.22, {100: (1840, 0.13, 0.32), 10: (1160, 0.21, 0.91), 2: (1020, 0.22, 0.99)}),
    ("eta2", 5000): (0.09, {100: (5901, 0.00, 0.00), 10: (5549, 0.07, 0.60), 2: (5090, 0.09, 0.95)}),
    ("eta2", 10000): (0.06, {100: (10802, 0.00, 0.00), 10: (10692, 0.04, 0.31), 2: (10159, 0.06, 0.89)}),
}

TABLE2 = {
    ("srs", 1000): (0.35, {100: (1628, 0.24, 0.45), 10: (1086, 0.31, 0.77), 2: (1010, 0.34, 0.89)}),
    ("srs", 5000): (0.16, {100: (5944, 0.02, 0.03), 10: (5351, 0.13, 0.63), 2: (5048, 0.14, 0.87)}),
    ("srs", 10000): (0.11, {100: (10900, 0.00, 0.00), 10: (10552, 0.07, 0.49), 2: (10090, 0.10, 0.84)}),
    ("eta2", 1000): (0.25, {100: (1844, 0.13, 0.26), 10: (1162, 0.22, 0.71), 2: (1019, 0.23, 0.86)}),
    ("eta2", 5000): (0.11, {100: (5901, 0.00, 0.00), 10: (5547, 0.08, 0.47), 2: (5089, 0.10, 0.85)}),
    ("eta2", 10000): (0.07, {100: (10802, 0.00, 0.00), 10: (10691, 0.04, 0.25), 2: (10159, 0.06, 0.80)}),
}

TABLE4 = {
    "srs-m1000": {
        "panel_se": (0.20, 0.20, 0.14, 0.28, 0.28, 0.14, 0.28, 0.28, 0.13),
        "pACS": (0.71, 0.73, 0.90, 0.89, 0.89, 0.98, 0.89, 0.91, 0.98),
        "iACS": (0.57, 0.60, 0.52, 0.69, 0.70, 0.52, 0.84, 0.85, 0.75),
    },
    "srs-m5000": {
        "panel_se": (0.09, 0.09, 0.06, 0.12, 0.12, 0.06, 0.12, 0.12, 0.06),
        "pACS": (0.09, 0.11, 0.38, 0.62, 0.63, 0.87, 0.65, 0.64, 0.91),
        "iACS": (0.49, 0.51, 0.49, 0.67, 0.67, 0.53, 0.85, 0.84, 0.76),
    },
    "eta2-m1000": {
        "panel_se": (0.17, 0.17, 0.12, 0.24, 0.24, 0.12, 0.24, 0.24, 0.12),
        "pACS": (0.31, 0.33, 0.41, 0.51, 0.51, 0.50, 0.52, 0.53, 0.51),
        "iACS": (0.70, 0.69, 0.68, 0.79, 0.81, 0.68, 0.89, 0.90, 0.84),
    },
}
