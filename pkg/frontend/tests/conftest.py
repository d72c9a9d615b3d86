import numpy as np
import pytest


def write_run_dir(root, name, n_cells=64, n_times=20, L=5.0, t_final=25.0, peak_at=2.5):
    """Synthetic run directory conforming to the solver's CSV contract."""
    run = root / name
    run.mkdir(parents=True)
    x = (np.arange(n_cells) + 0.5) * L / n_cells
    t = np.linspace(0.0, t_final, n_times)
    width = 0.4 * L
    u_t = [
        1.0 + (ti / t_final) * 2.0 * np.exp(-((x - peak_at) ** 2) / (2 * (width / 4) ** 2))
        for ti in t
    ]
    with open(run / "profile.csv", "w") as fh:
        fh.write("x,u\n")
        for xi, ui in zip(x, u_t[-1]):
            fh.write(f"{xi:.17g},{ui:.17g}\n")
    with open(run / "kymograph.csv", "w") as fh:
        fh.write("t," + ",".join(f"{xi:.17g}" for xi in x) + "\n")
        for ti, ui in zip(t, u_t):
            fh.write(f"{ti:.17g}," + ",".join(f"{v:.17g}" for v in ui) + "\n")
    return run


@pytest.fixture
def run_dirs(tmp_path):
    return [
        write_run_dir(tmp_path, f"run{i}", peak_at=p)
        for i, p in enumerate((1.2, 2.5, 3.8))
    ]
