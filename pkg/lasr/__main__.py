"""Entry point for ``python -m lasr``."""

import sys

from lasr.main import main

sys.exit(main())
