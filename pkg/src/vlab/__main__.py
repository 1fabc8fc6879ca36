"""Allow ``python -m vlab`` as an alias for the ``vlab`` console command."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
