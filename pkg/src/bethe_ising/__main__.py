import sys

from bethe_ising.cli import main

sys.exit(main())
