import sys

from xlumi.cli import main

sys.exit(main())
