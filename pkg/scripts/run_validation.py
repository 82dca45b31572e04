"""Run the acceptance checks and print one line per check."""

import sys

from su11nco import validation


def main():
    level = sys.argv[1] if len(sys.argv) > 1 else "full"
    checks = validation.quick_checks() if level == "quick" else validation.full_checks()
    for c in checks:
        print(c.line(), flush=True)
    return 0 if all(c.passed for c in checks) else 2


if __name__ == "__main__":
    sys.exit(main())
