import sys

from rabi2.cli import main

sys.exit(main())
