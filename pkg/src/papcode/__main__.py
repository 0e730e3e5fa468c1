import sys

from papcode.cli import main

sys.exit(main())
