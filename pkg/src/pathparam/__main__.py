"""Module entry point so ``python -m pathparam`` runs the CLI."""

import sys

from .cli import main

sys.exit(main())
