import sys

from frameparse.cli import main

sys.exit(main())
