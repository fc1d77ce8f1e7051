import sys

from mlrisk.cli import main

sys.exit(main())
