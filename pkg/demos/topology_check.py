"""Check every shipped control structure against the pairing and selector rules."""

from arcsim.structures import FIXTURES, MUTATIONS, load_fixture
from arcsim.topology import Severity, check_all


def main() -> None:
    for name in FIXTURES + tuple(MUTATIONS.values()):
        reports = check_all(load_fixture(name))
        bad = [r for r in reports if r.severity is not Severity.PASS]
        status = ", ".join(f"{r.rule} {r.severity.value}" for r in bad) or "all rules pass"
        print(f"{name:<26} {status}")
        for r in bad:
            print(f"    {r.message}")


if __name__ == "__main__":
    main()
