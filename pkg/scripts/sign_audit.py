"""Print the chi_p(-1) audit table for the default sweep under both orientations."""
from hida_interp.interp_compare import sign_audit


def main():
    rows = sign_audit()
    print(f"{'form':6} {'chi':6} {'n':>2} {'orientation':12} {'chi_p(-1)':>9} {'discrepancy':>11}")
    for r in rows:
        print(f"{r.form:6} {r.chi:6} {r.n:>2} {r.orientation:12} {r.chi_p_parity:>9} {r.discrepancy:>11}")
    std = [r for r in rows if r.orientation == "standard"]
    agree = all(r.discrepancy == r.chi_p_parity for r in std)
    print(f"standard discrepancy equals chi_p(-1) on all {len(std)} rows: {agree}")


if __name__ == "__main__":
    main()
