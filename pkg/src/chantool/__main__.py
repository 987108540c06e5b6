import sys

from chantool.cli import main

sys.exit(main())
