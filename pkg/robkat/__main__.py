import sys

from robkat.cli import main

sys.exit(main())
