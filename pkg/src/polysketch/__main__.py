"""python -m polysketch entry."""

import sys

from .cli import main

sys.exit(main())
