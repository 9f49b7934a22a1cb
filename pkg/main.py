"""delaytail - CLI entry point."""

import sys

from delaytail.__main__ import main

if __name__ == "__main__":
    sys.exit(main())
