"""Entry point for ``python -m twotime``."""

from .cli import main

if __name__ == "__main__":
    main()
