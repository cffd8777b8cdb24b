"""Allow ``python3 -m bellmi`` to behave like the ``bellmi`` script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
