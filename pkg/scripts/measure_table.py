"""Print the level-r measure of a catalog form, e.g. `python3 scripts/measure_table.py 11a 3 2`."""
import sys

from hida_interp.padic_measures import mtt_measure
from hida_interp.qexp_analytic import get_form


def main(argv):
    name, p, r = argv[0], int(argv[1]), int(argv[2])
    mu = mtt_measure(get_form(name), p, r)
    print(f"distribution: {mu.check_distribution(1)}  bounded: {mu.at_level(r).is_bounded(20)}")
    for a, v in sorted(mu.values.items()):
        print(f"{a:>5} mod {mu.modulus}: {v}")


if __name__ == "__main__":
    main(sys.argv[1:] or ["11a", "3", "2"])
