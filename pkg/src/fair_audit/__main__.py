import sys

from fair_audit.cli import main

sys.exit(main())
