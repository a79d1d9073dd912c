"""Module entry point so ``python -m moongate`` matches the console script."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
