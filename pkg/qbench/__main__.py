"""Allow ``python -m qbench``."""

import sys

from .cli import main

sys.exit(main())
