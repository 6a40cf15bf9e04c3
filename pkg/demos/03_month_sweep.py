"""How much does the backscatter change as the lesion grows?

Runs a handful of months with identical excitation and prints the relative
L2 distance of each record from the month-0 record.  Same numbers as
``melanoma-fem sweep``, without the files.

Run: python demos/03_month_sweep.py
"""

from concurrent.futures import ProcessPoolExecutor

from melanoma_fem import SimulationConfig, melanoma_model, relative_l2, run_simulation

MONTHS = (0, 6, 12, 18, 22)


def record(month):
    return run_simulation(SimulationConfig(month=month)).record.values


if __name__ == "__main__":
    with ProcessPoolExecutor() as pool:
        records = dict(zip(MONTHS, pool.map(record, MONTHS)))

    base = records[0]
    print("month  depth  rel. L2 vs month 0")
    for month in MONTHS:
        print(f"{month:5d}  {melanoma_model(month).depth:5.2f}  {relative_l2(records[month], base):.4f}")
