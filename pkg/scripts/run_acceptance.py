"""Run the nine acceptance criteria outside pytest and print one line each."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import test_acceptance  # noqa: E402


def main() -> int:
    failed = 0
    for name in sorted(n for n in dir(test_acceptance) if n.startswith("test_criterion")):
        try:
            getattr(test_acceptance, name)()
        except AssertionError:
            failed += 1
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
