import sys

from discrete_bilal.cli import main

sys.exit(main())
