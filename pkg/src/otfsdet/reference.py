"""Reference benchmark values the reproduction report compares against.

These are the published comparison targets for the default experiment
geometry: the complexity sizing table (M = N = 128) and BER-vs-SNR tables
for the SISO and 2x2 configurations at 4-QAM. Values are stored exactly as
printed at the source's precision.
"""

SNR_GRID_DB = (0.0, 4.0, 8.0, 12.0, 16.0)

DETECTOR_ORDER = ("mld", "mlp", "cnn", "resnet")

# BER by fading shape m -> detector -> value per SNR_GRID_DB entry
SISO_BER = {
    1: {
        "mld": (0.207282, 0.117487, 0.058562, 0.025438, 0.009554),
        "mlp": (0.207712, 0.117672, 0.058598, 0.025505, 0.009425),
        "cnn": (0.207655, 0.117662, 0.058634, 0.025508, 0.009418),
        "resnet": (0.207694, 0.117689, 0.058640, 0.025494, 0.009426),
    },
    2: {
        "mld": (0.136612, 0.072703, 0.030839, 0.015597, 0.004976),
        "mlp": (0.136162, 0.073009, 0.030915, 0.015096, 0.004913),
        "cnn": (0.136264, 0.073044, 0.030943, 0.015106, 0.004924),
        "resnet": (0.136216, 0.073034, 0.030946, 0.015093, 0.004936),
    },
}

MIMO_BER = {
    1: {
        "mld": (0.054378, 0.015725, 0.003014, 0.000463, 0.000113),
        "mlp": (0.055550, 0.014987, 0.003024, 0.000699, 0.000122),
        "cnn": (0.055620, 0.014990, 0.003031, 0.000707, 0.000122),
        "resnet": (0.055761, 0.015022, 0.003021, 0.000702, 0.000121),
    },
    2: {
        "mld": (0.022834, 0.005125, 0.001149, 0.000181, 0.000083),
        "mlp": (0.022565, 0.004641, 0.000972, 0.000167, 0.000022),
        "cnn": (0.022621, 0.004662, 0.000974, 0.000172, 0.000023),
        "resnet": (0.022656, 0.004676, 0.000977, 0.000167, 0.000021),
    },
}

# complexity table, 3 significant figures as published; keys (nt, q)
COMPLEXITY_6G = {
    (8, 256): {"mld": 2.01e8, "mlp": 2.12e6, "cnn": 1.37e8, "resnet": 2.32e9},
    (8, 1024): {"mld": 8.05e8, "mlp": 2.17e6, "cnn": 1.37e8, "resnet": 2.32e9},
    (16, 256): {"mld": 4.03e8, "mlp": 2.12e6, "cnn": 1.37e8, "resnet": 2.32e9},
    (16, 1024): {"mld": 1.61e9, "mlp": 2.17e6, "cnn": 1.37e8, "resnet": 2.32e9},
    (32, 256): {"mld": 8.05e8, "mlp": 2.12e6, "cnn": 1.37e8, "resnet": 2.32e9},
    (32, 1024): {"mld": 3.22e9, "mlp": 2.17e6, "cnn": 1.37e8, "resnet": 2.32e9},
    (64, 256): {"mld": 1.61e9, "mlp": 2.12e6, "cnn": 1.37e8, "resnet": 2.32e9},
    (64, 1024): {"mld": 6.44e9, "mlp": 2.17e6, "cnn": 1.37e8, "resnet": 2.32e9},
    (128, 1024): {"mld": 1.29e10, "mlp": 2.17e6, "cnn": 1.37e8, "resnet": 2.32e9},
    (256, 1024): {"mld": 2.58e10, "mlp": 2.17e6, "cnn": 1.37e8, "resnet": 2.32e9},
}


def ber_reference(nt, m, detector):
    """Reference BER sequence over SNR_GRID_DB, or None if not tabulated."""
    table = {1: SISO_BER, 2: MIMO_BER}.get(nt)
    if table is None or m not in table:
        return None
    return table[m].get(detector)
