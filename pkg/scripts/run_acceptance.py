"""Run the acceptance suite and print one PASS/FAIL line per criterion."""
import os
import subprocess
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def main():
    cmd = [sys.executable, "-m", "pytest", "-q", os.path.join(ROOT, "tests", "test_acceptance.py"), *sys.argv[1:]]
    return subprocess.call(cmd, cwd=ROOT)


if __name__ == "__main__":
    sys.exit(main())
