"""Regenerate the filter data files shipped under morphdet/features/data/.

The residual kernels are fixed constants; the binary-feature banks are
deterministic surrogates, so rerunning this script reproduces identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "morphdet" / "features" / "data"

SRM_KERNELS = {
    "kernels": [
        {
            "name": "second_order_combined",
            "scale": 2,
            "weights": [
                [0, 1, 0],
                [1, -4, 1],
                [0, 1, 0],
            ],
        },
        {
            "name": "square_5x5",
            "scale": 12,
            "weights": [
                [-1, 2, -2, 2, -1],
                [2, -6, 8, -6, 2],
                [-2, 8, -12, 8, -2],
                [2, -6, 8, -6, 2],
                [-1, 2, -2, 2, -1],
            ],
        },
        {
            "name": "cross_second_order_5x5",
            "scale": 4,
            "weights": [
                [0, 0, -1, 0, 0],
                [0, 0, 2, 0, 0],
                [-1, 2, -4, 2, -1],
                [0, 0, 2, 0, 0],
                [0, 0, -1, 0, 0],
            ],
        },
    ]
}


def main() -> None:
    import sys

    sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
    from morphdet.features.bsif import bank_grid, bank_to_json, make_surrogate_bank

    DATA_DIR.mkdir(parents=True, exist_ok=True)
    (DATA_DIR / "srm_kernels.json").write_text(json.dumps(SRM_KERNELS, indent=1) + "\n")
    for size, bits in bank_grid():
        bank = make_surrogate_bank(size, bits)
        path = DATA_DIR / f"bsif_{size}x{size}_{bits}bit.json"
        path.write_text(bank_to_json(bank) + "\n")
        print(f"wrote {path.name}")
    print(f"wrote srm_kernels.json and {len(bank_grid())} filter banks")


if __name__ == "__main__":
    main()
