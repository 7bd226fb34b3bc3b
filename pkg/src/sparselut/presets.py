"""Named experiment presets.

The hdr/jsc presets mirror the published LUT-network benchmark shapes (layer
widths, per-neuron fan-in, activation bits, polynomial degree) with the full
300-epoch two-phase protocol. The desk-* presets are scaled-down protocols
that finish on a laptop; they are what the acceptance suite runs.
"""

PRESETS = {
    # MNIST handwritten-digit shapes (784 inputs, 10 classes)
    "hdr-d1": {
        "dataset": "mnist",
        "widths": [256, 100, 100, 100, 100, 10],
        "fanin": 6, "beta": 2, "degree": 1, "input_bits": 2,
        "epochs": 300, "phase1_epochs": 240,
    },
    "hdr-d2": {
        "dataset": "mnist",
        "widths": [256, 100, 100, 100, 100, 10],
        "fanin": 6, "beta": 2, "degree": 2, "input_bits": 2,
        "epochs": 300, "phase1_epochs": 240,
    },
    "hdr-5l": {
        "dataset": "mnist",
        "widths": [256, 100, 100, 100, 10],
        "fanin": 6, "beta": 2, "degree": 1, "input_bits": 2,
        "epochs": 300, "phase1_epochs": 240,
    },
    # jet-substructure shapes (16 inputs, 5 classes); the physics CSV is
    # supplied by the user, only the schema is fixed here
    "jsc-xl-d1": {
        "dataset": "csv", "csv_features": 16, "csv_classes": 5,
        "widths": [128, 64, 64, 64, 5],
        "fanin": [2, 3, 3, 3, 3], "beta": [5, 5, 5, 5, 5],
        "degree": 1, "input_bits": 7,
        "epochs": 300, "phase1_epochs": 240,
    },
    "jsc-xl-d2": {
        "dataset": "csv", "csv_features": 16, "csv_classes": 5,
        "widths": [128, 64, 64, 64, 5],
        "fanin": [2, 3, 3, 3, 3], "beta": [5, 5, 5, 5, 5],
        "degree": 2, "input_bits": 7,
        "epochs": 300, "phase1_epochs": 240,
    },
    "jsc-m-lite-d1": {
        "dataset": "csv", "csv_features": 16, "csv_classes": 5,
        "widths": [64, 32, 5],
        "fanin": 4, "beta": 3, "degree": 1, "input_bits": 3,
        "epochs": 300, "phase1_epochs": 240,
    },
    "jsc-m-lite-d2": {
        "dataset": "csv", "csv_features": 16, "csv_classes": 5,
        "widths": [64, 32, 5],
        "fanin": 4, "beta": 3, "degree": 2, "input_bits": 3,
        "epochs": 300, "phase1_epochs": 240,
    },
    # desk-scale protocols (derive constants scaled to the shorter step
    # budget: stronger theta step and L1 pull than the 300-epoch settings)
    "desk-mnist": {
        "dataset": "blobs", "blobs_side": 28, "blobs_classes": 10,
        "blobs_samples": 20000, "blobs_seed": 11,
        "widths": [256, 100, 100, 100, 10],
        "fanin": 6, "beta": 2, "degree": 1, "input_bits": 2,
        "epochs": 40, "phase1_epochs": 32, "retrain_epochs": 60,
        "lr": 3.0, "alpha": 1e-4, "eps2": 1e-4,
    },
    "desk-blobs": {
        "dataset": "blobs", "blobs_side": 16, "blobs_classes": 2,
        "blobs_samples": 8000, "blobs_seed": 1,
        "widths": [8, 6, 2],
        "fanin": 6, "beta": 2, "degree": 1, "input_bits": 2,
        "epochs": 400, "phase1_epochs": 320, "retrain_epochs": 30,
        "lr": 3.0, "alpha": 6e-5, "eps2": 1e-4,
    },
}
